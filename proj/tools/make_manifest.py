"""Regenerates fixtures/manifest.json.

Hand-computed goldens are written inline. Pipeline goldens are read from fresh
runs of the bundled configs:

    cmake --build build
    python3 tools/make_manifest.py --sqem build/sqem
"""

import argparse
import json
import pathlib
import subprocess
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def golden(value, source, tolerance=0.0):
    return {"value": value, "tolerance": tolerance, "source": source}


def run(sqem, config):
    with tempfile.TemporaryDirectory() as out:
        subprocess.run([sqem, "--config", str(ROOT / "fixtures" / config), "--out", out, "-q"], check=True)
        return json.loads((pathlib.Path(out) / "report.json").read_text())


def pointer(report, path):
    node = report
    for part in path.strip("/").split("/"):
        node = node[int(part)] if isinstance(node, list) else node[part]
    return node


def pipeline_fixture(sqem, name, config, pointers, extra=None):
    report = run(sqem, config)
    expected = {p: golden(pointer(report, p), "derived", 1e-9) for p in pointers}
    expected.update(extra or {})
    return {
        "name": name,
        "command": "pipeline",
        "inputs": {"config": config},
        "regenerate": f"sqem --config fixtures/{config} --out <dir>",
        "expected": expected,
    }


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sqem", default=str(ROOT / "build" / "sqem"))
    args = parser.parse_args()

    fixtures = [
        {
            "name": "defect_model_walkthrough",
            "command": "predict",
            "regenerate": "hand calculation: exp(-5.939 + 0.704*ln 18 + 6.011*0.65)",
            "inputs": {
                "intercept": -5.939,
                "coefficients": {"FunctionPoints": 0.704, "VAF": 6.011, "DevType": -1.480},
                "transforms": {"FunctionPoints": "ln"},
                "row": {"FunctionPoints": 18, "VAF": 0.65, "DevType": 0},
            },
            "expected": {
                "prediction": golden(1.0, "published", 0.01),
                "ln_prediction": golden(0.002971717558899911, "derived", 1e-12),
            },
        },
        {
            "name": "vaf_minimum",
            "command": "vaf",
            "regenerate": "hand calculation: 0.65 + 0.01*0",
            "inputs": {"ratings": [0] * 14},
            "expected": {"vaf": golden(0.65, "published", 1e-12)},
        },
        {
            "name": "vaf_maximum",
            "command": "vaf",
            "regenerate": "hand calculation: 0.65 + 0.01*70",
            "inputs": {"ratings": [5] * 14},
            "expected": {"vaf": golden(1.35, "published", 1e-12)},
        },
        {
            "name": "mmre_pred_arithmetic",
            "command": "metrics",
            "regenerate": "hand calculation: MREs 0.2, 0.2, 0.5, 0 -> mean 0.225, 3 of 4 within 0.25",
            "inputs": {"actuals": [100, 50, 20, 10], "predictions": [120, 40, 30, 10], "m": 0.25},
            "expected": {"mmre": golden(0.225, "derived", 1e-12), "pred": golden(0.75, "derived", 0.0)},
        },
        {
            "name": "eightfold_on_64",
            "command": "kfold",
            "regenerate": "hand calculation: 64 / 8",
            "inputs": {"n": 64, "k": 8, "seed": 1},
            "expected": {
                "folds": golden(8, "trivial"),
                "min_fold_size": golden(8, "trivial"),
                "max_fold_size": golden(8, "trivial"),
            },
        },
        {
            "name": "spearman_small",
            "command": "spearman",
            "regenerate": "hand calculation: 1 - 6*4/(5*24); p from t = rho*sqrt(3/(1-rho^2)) on 3 df (scipy.stats.spearmanr)",
            "inputs": {"x": [1, 2, 3, 4, 5], "y": [2, 1, 4, 3, 5]},
            "expected": {"rho": golden(0.8, "derived", 1e-12), "p": golden(0.10408803866182788, "derived", 1e-9)},
        },
        {
            "name": "anova_two_groups",
            "command": "anova",
            "regenerate": "hand calculation: SSB 13.5, SSW 4; p from scipy.stats.f.sf(13.5, 1, 4)",
            "inputs": {"groups": [[1, 2, 3], [4, 5, 6]]},
            "expected": {
                "f": golden(13.5, "derived", 1e-12),
                "p": golden(0.02131164112875672, "derived", 1e-9),
                "df_between": golden(1, "trivial"),
                "df_within": golden(4, "trivial"),
            },
        },
        pipeline_fixture(
            args.sqem,
            "synthetic_replication",
            "synthetic_config.json",
            [
                "/final_model/formula",
                "/final_model/r_squared",
                "/final_model/terms/0/B",
                "/data_preparation/rows_after_filters",
                "/resubstitution/average/improvement_percent",
                "/cross_validation/0/average/improvement_percent",
                "/cross_validation/1/average/improvement_percent",
            ],
            {
                "/final_model/terms/0/B": golden(0.704, "published", 0.1),
                "/final_model/terms/2/B": golden(-1.480, "published", 0.25),
            },
        ),
        pipeline_fixture(
            args.sqem,
            "csv_replication",
            "csv_config.json",
            ["/final_model/formula", "/final_model/r_squared", "/cross_validation/0/average/improvement_percent"],
        ),
        pipeline_fixture(
            args.sqem,
            "catreg_nominal",
            "catreg_config.json",
            ["/catreg/model/formula", "/catreg/model/r_squared", "/catreg/converged"],
        ),
        pipeline_fixture(
            args.sqem,
            "catreg_ordinal",
            "ordinal_config.json",
            [
                "/catreg/model/r_squared",
                "/catreg/quantifications/SizeClass/S",
                "/catreg/quantifications/SizeClass/M",
                "/catreg/quantifications/SizeClass/L",
                "/catreg/quantifications/SizeClass/XL",
            ],
        ),
    ]
    manifest = {
        "regenerate": "python3 tools/make_manifest.py --sqem build/sqem",
        "verify": "sqem_goldens fixtures/manifest.json",
        "fixtures": fixtures,
    }
    (ROOT / "fixtures" / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
