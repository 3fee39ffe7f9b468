"""Command-line interface tests, exercised through main()."""

import json
from pathlib import Path

import numpy as np
import pytest

from molfusion.autodiff import load_checkpoint
from molfusion.cli import main, random_molecule_graph

import corpus_util

TINY_CONFIG = {
    "model": {
        "transformer_layers": 1,
        "heads": 2,
        "head_dim": 4,
        "hidden_dim": 8,
        "gat_out_dim": 8,
        "gat_layers": 1,
        "fingerprint_embed_dim": 8,
    },
    "train": {"epochs": 2, "batch_size": 16, "patience": 5},
    "featurize": {"morgan_bits": 128, "erg_max_path": 5},
}


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    corpus_util.write_regression_csv(root / "reg.csv", corpus_util.build_corpus(40))
    # larger classification fixture keeps both classes in every fold
    corpus_util.write_classification_csv(root / "cls.csv", corpus_util.build_corpus(80))
    (root / "config.json").write_text(json.dumps(TINY_CONFIG))
    return root


@pytest.fixture(scope="module")
def trained(workdir):
    out = workdir / "run"
    code = main(
        [
            "train",
            "--data", str(workdir / "reg.csv"),
            "--task", "reg",
            "--split", "random",
            "--config", str(workdir / "config.json"),
            "--seeds", "1",
            "--out", str(out),
        ]
    )
    assert code == 0
    return out


class TestFeaturizeCommand:
    def test_widths_and_determinism(self, workdir):
        out1, out2 = workdir / "f1.jsonl", workdir / "f2.jsonl"
        for out in (out1, out2):
            code = main(
                ["featurize", "--input", str(workdir / "reg.csv"), "--out", str(out),
                 "--config", str(workdir / "config.json")]
            )
            assert code == 0
        assert out1.read_bytes() == out2.read_bytes()
        first = json.loads(out1.read_text().splitlines()[0])
        assert len(first["atom_features"][0]) == 57
        if first["bonds"]:
            assert len(first["bonds"][0]["features"]) == 13

    def test_fingerprint_subset_flag(self, workdir):
        out = workdir / "fp_only.jsonl"
        code = main(
            ["featurize", "--input", str(workdir / "reg.csv"), "--out", str(out),
             "--fingerprints", "morgan", "--config", str(workdir / "config.json")]
        )
        assert code == 0
        first = json.loads(out.read_text().splitlines()[0])
        assert len(first["fingerprint"]) == 128

    def test_error_rows_surfaced(self, workdir):
        bad = workdir / "bad.csv"
        bad.write_text("smiles,y\nCCO,1\nnot_a((smiles,2\n")
        out = workdir / "bad.jsonl"
        assert main(["featurize", "--input", str(bad), "--out", str(out)]) == 0
        lines = [json.loads(l) for l in out.read_text().splitlines()]
        assert "error" in lines[1]
        assert lines[1]["row"] == 3


class TestTrainCommand:
    def test_outputs_exist(self, trained):
        assert (trained / "report.json").exists()
        assert (trained / "seed_0.ckpt").exists()
        assert (trained / "seed_0_split.json").exists()
        assert (trained / "seed_0_log.jsonl").exists()
        manifest = json.loads((trained / "manifest.json").read_text())
        assert manifest["status"] == "complete"
        assert manifest["dataset_checksum"]

    def test_report_has_metric(self, trained):
        report = json.loads((trained / "report.json").read_text())
        assert report["metric"] == "rmse"
        assert "0" in report["per_seed"]

    def test_reproducible_bytes(self, workdir, trained):
        rerun = workdir / "rerun"
        code = main(
            [
                "train",
                "--data", str(workdir / "reg.csv"),
                "--task", "reg",
                "--split", "random",
                "--config", str(workdir / "config.json"),
                "--seeds", "1",
                "--out", str(rerun),
            ]
        )
        assert code == 0
        assert (rerun / "seed_0.ckpt").read_bytes() == (trained / "seed_0.ckpt").read_bytes()
        assert (rerun / "report.json").read_bytes() == (trained / "report.json").read_bytes()

    def test_scaffold_split_manifest_disjoint(self, workdir):
        out = workdir / "scaffold_run"
        code = main(
            [
                "train",
                "--data", str(workdir / "cls.csv"),
                "--task", "cls",
                "--split", "scaffold",
                "--config", str(workdir / "config.json"),
                "--seeds", "1",
                "--epochs", "1",
                "--out", str(out),
            ]
        )
        assert code == 0
        from molfusion.chem import parse_smiles, scaffold_hash
        from molfusion.data import load_csv

        ds = load_csv(workdir / "cls.csv", "smiles", ["active"], "classification")
        manifest = json.loads((out / "seed_0_split.json").read_text())
        owner = {}
        for part, indices in manifest["indices"].items():
            for i in indices:
                key = scaffold_hash(parse_smiles(ds.records[i][0]))
                assert owner.setdefault(key, part) == part

    def test_gat_only_checkpoint_lacks_transformer(self, workdir):
        out = workdir / "gat_only_run"
        code = main(
            [
                "train",
                "--data", str(workdir / "reg.csv"),
                "--task", "reg",
                "--config", str(workdir / "config.json"),
                "--seeds", "1",
                "--epochs", "1",
                "--out", str(out),
                "--ablate", "gat-only",
            ]
        )
        assert code == 0
        _config, arrays = load_checkpoint(out / "seed_0.ckpt")
        assert not any(name.startswith("transformer.") for name in arrays)

    def test_bad_config_lists_problems_before_start(self, workdir, capsys):
        bad_config = workdir / "bad_config.json"
        bad_config.write_text(json.dumps({"model": {"hidden_dim": 7, "heads": 2, "head_dim": 4}}))
        code = main(
            [
                "train",
                "--data", str(workdir / "reg.csv"),
                "--task", "reg",
                "--config", str(bad_config),
                "--seeds", "1",
                "--out", str(workdir / "never"),
            ]
        )
        assert code == 1
        assert "hidden_dim" in capsys.readouterr().err
        assert not (workdir / "never").exists()

    def test_missing_data_exit_2(self, workdir):
        code = main(
            ["train", "--data", str(workdir / "nope.csv"), "--task", "reg",
             "--out", str(workdir / "x")]
        )
        assert code == 2


class TestPredictCommand:
    def test_roundtrip_reproduces_forward(self, workdir, trained):
        out = workdir / "preds.csv"
        code = main(
            ["predict", "--checkpoint", str(trained / "seed_0.ckpt"),
             "--input", str(workdir / "reg.csv"), "--out", str(out)]
        )
        assert code == 0
        import csv

        from molfusion.cli import build_model_from_checkpoint
        from molfusion.featurize import FeaturizeConfig, featurize
        from molfusion.chem import parse_smiles

        model, config = build_model_from_checkpoint(str(trained / "seed_0.ckpt"))
        fcfg = FeaturizeConfig.from_dict(config["featurize"])
        rows = list(csv.DictReader(out.read_text().splitlines()))
        for row in rows[:5]:
            mol = featurize(parse_smiles(row["smiles"]), fcfg)
            expected = model.predict(mol)[0]
            assert float(row["prediction"]) == expected  # bit-for-bit via repr

    def test_classification_outputs_probabilities(self, workdir):
        out_dir = workdir / "cls_run"
        main(
            ["train", "--data", str(workdir / "cls.csv"), "--task", "cls",
             "--config", str(workdir / "config.json"), "--seeds", "1",
             "--epochs", "1", "--out", str(out_dir)]
        )
        preds = workdir / "cls_preds.csv"
        code = main(
            ["predict", "--checkpoint", str(out_dir / "seed_0.ckpt"),
             "--input", str(workdir / "cls.csv"), "--out", str(preds)]
        )
        assert code == 0
        import csv

        for row in csv.DictReader(preds.read_text().splitlines()):
            assert 0.0 < float(row["prediction"]) < 1.0

    def test_bad_rows_marked_not_dropped(self, workdir, trained):
        bad = workdir / "mixed.csv"
        bad.write_text("smiles,y\nCCO,1\nxx((bad,2\nCCC,3\n")
        out = workdir / "mixed_preds.csv"
        code = main(
            ["predict", "--checkpoint", str(trained / "seed_0.ckpt"),
             "--input", str(bad), "--out", str(out)]
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 4  # header + all three rows
        assert "ERROR:" in lines[2]

    def test_digest_mismatch_rejected_without_force(self, workdir, trained, tmp_path):
        corrupted = tmp_path / "bad.ckpt"
        raw = bytearray((trained / "seed_0.ckpt").read_bytes())
        idx = raw.find(b'"epochs":2')
        assert idx > 0
        raw[idx + 9 : idx + 10] = b"3"
        corrupted.write_bytes(bytes(raw))
        code = main(
            ["predict", "--checkpoint", str(corrupted),
             "--input", str(workdir / "reg.csv"), "--out", str(tmp_path / "p.csv")]
        )
        assert code == 2
        code = main(
            ["predict", "--checkpoint", str(corrupted), "--force",
             "--input", str(workdir / "reg.csv"), "--out", str(tmp_path / "p.csv")]
        )
        assert code == 0


class TestExplainCommand:
    def test_bundle_contents(self, workdir, trained):
        out = workdir / "explain.json"
        code = main(
            ["explain", "--checkpoint", str(trained / "seed_0.ckpt"),
             "--smiles", "CC(=O)Nc1ccccc1", "--out", str(out)]
        )
        assert code == 0
        bundle = json.loads(out.read_text())
        n = bundle["n_atoms"]
        assert abs(sum(bundle["readout_attention"]) - 1.0) < 1e-9
        for layer in bundle["transformer_attention"]:
            for head in layer:
                for row in head:
                    assert abs(sum(row) - 1.0) < 1e-9
        for head in bundle["cross_attention"]:
            assert len(head) == n + 1
            assert abs(sum(head) - 1.0) < 1e-9
        for matrix in bundle["gat_attention"]:
            for i, row in enumerate(matrix):
                total = sum(row)
                assert abs(total - 1.0) < 1e-9 or total == 0.0
        assert 0.0 <= bundle["gate_alpha"] <= 1.0
        assert len(bundle["lambda_attn"]) == 1

    def test_single_atom_readout_weight_one(self, workdir, trained):
        out = workdir / "explain_single.json"
        main(
            ["explain", "--checkpoint", str(trained / "seed_0.ckpt"),
             "--smiles", "C", "--out", str(out)]
        )
        bundle = json.loads(out.read_text())
        assert bundle["readout_attention"] == [1.0]


class TestGradcheckCommand:
    def test_default_passes(self, workdir, capsys):
        code = main(["gradcheck", "--config", str(workdir / "config.json"), "--atoms", "5"])
        assert code == 0
        assert "PASS" in capsys.readouterr().out

    def test_no_fingerprint_path_differentiable(self, workdir):
        code = main(
            ["gradcheck", "--config", str(workdir / "config.json"), "--atoms", "4",
             "--ablate", "no-fp"]
        )
        assert code == 0

    def test_random_molecule_valid(self):
        for seed in range(5):
            g = random_molecule_graph(6, seed=seed)
            assert g.n_atoms == 6
            assert len(g.components()) == 1


class TestUsage:
    def test_unknown_flag_exit_1(self):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--bogus"])
        assert exc.value.code == 1

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
