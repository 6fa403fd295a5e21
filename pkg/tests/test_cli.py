"""End-to-end pipeline runs through the command-line entry point."""
import csv

import numpy as np
import pytest

from fetalfuse.cli import main


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Synthesize a small dataset and run the full pipeline once."""
    root = tmp_path_factory.mktemp("pipeline")
    data = root / "data"
    assert main(["synth", "--out-dir", str(data), "--n", "6",
                 "--seed", "0"]) == 0
    manifest = data / "manifest.csv"
    features = root / "features.csv"
    labels = root / "labels.csv"
    model = root / "model.fus1"
    preds = root / "preds.csv"
    report = root / "report.csv"
    assert main(["extract", "--manifest", str(manifest),
                 "--out", str(features)]) == 0
    assert main(["label", "--manifest", str(manifest),
                 "--out", str(labels)]) == 0
    assert main(["train", "--features", str(features),
                 "--embeddings", str(data / "embeddings.csv"),
                 "--labels", str(labels), "--epochs", "3", "--batch", "4",
                 "--d-e", "16", "--lr", "1e-3", "--seed", "1",
                 "--out", str(model)]) == 0
    assert main(["predict", "--model", str(model),
                 "--features", str(features),
                 "--embeddings", str(data / "embeddings.csv"),
                 "--out", str(preds)]) == 0
    assert main(["eval", "--pred", str(preds), "--labels", str(labels),
                 "--out", str(report)]) == 0
    return root


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestPipeline:
    def test_features_file_shape(self, pipeline):
        rows = read_rows(pipeline / "features.csv")
        assert rows[0][0] == "id" and len(rows[0]) == 98
        assert len(rows) == 7  # header + 6 samples
        for rec in rows[1:]:
            assert all(np.isfinite(float(v)) for v in rec[1:])

    def test_labels_in_plausible_range(self, pipeline):
        rows = read_rows(pipeline / "labels.csv")
        assert rows[0] == ["id", "hc_mm", "ga_days"]
        for rec in rows[1:]:
            assert 0 < float(rec[2]) <= 330

    def test_training_history_written(self, pipeline):
        rows = read_rows(pipeline / "model_history.csv")
        assert rows[0] == ["epoch", "train_loss", "val_mae"]
        assert len(rows) == 4  # header + 3 epochs

    def test_predictions_cover_all_ids(self, pipeline):
        preds = read_rows(pipeline / "preds.csv")
        labels = read_rows(pipeline / "labels.csv")
        assert preds[0] == ["id", "ga_pred_days"]
        assert {r[0] for r in preds[1:]} == {r[0] for r in labels[1:]}
        for rec in preds[1:]:
            assert np.isfinite(float(rec[1]))

    def test_eval_report_columns(self, pipeline):
        rows = read_rows(pipeline / "report.csv")
        assert rows[0] == ["n", "mae", "mae_std", "rmse", "r2", "pvalue"]
        assert int(rows[1][0]) == 6
        assert float(rows[1][1]) <= float(rows[1][3])  # mae <= rmse
        assert rows[1][5] == ""

    def test_eval_with_significance(self, pipeline):
        out = pipeline / "report_ab.csv"
        assert main(["eval", "--pred", str(pipeline / "preds.csv"),
                     "--pred-b", str(pipeline / "preds.csv"),
                     "--labels", str(pipeline / "labels.csv"),
                     "--out", str(out)]) == 0
        rows = read_rows(out)
        assert float(rows[1][5]) == 1.0  # identical predictions

    def test_attribute_command(self, pipeline):
        rows = read_rows(pipeline / "labels.csv")
        some_id = rows[1][0]
        out = pipeline / "attr.csv"
        assert main(["attribute", "--model", str(pipeline / "model.fus1"),
                     "--features", str(pipeline / "features.csv"),
                     "--embeddings", str(pipeline / "data" / "embeddings.csv"),
                     "--id", some_id, "--top-k", "5",
                     "--out", str(out)]) == 0
        arows = read_rows(out)
        assert arows[0] == ["id", "feature", "score_attn", "score_grad", "rank"]
        assert len(arows) == 6
        scores = [float(r[2]) for r in arows[1:]]
        assert scores == sorted(scores, reverse=True)

    def test_baseline_command(self, pipeline):
        out = pipeline / "baseline.csv"
        assert main(["baseline", "--features", str(pipeline / "features.csv"),
                     "--labels", str(pipeline / "labels.csv"),
                     "--model", "ridge", "--out", str(out)]) == 0
        rows = read_rows(out)
        assert rows[1][0] == "ridge" and np.isfinite(float(rows[1][2]))

    def test_no_temp_files_left_behind(self, pipeline):
        assert not list(pipeline.rglob("*.tmp"))


class TestDeterminism:
    def test_extract_byte_identical(self, pipeline, tmp_path):
        again = tmp_path / "features2.csv"
        assert main(["extract",
                     "--manifest", str(pipeline / "data" / "manifest.csv"),
                     "--out", str(again)]) == 0
        assert again.read_bytes() == (pipeline / "features.csv").read_bytes()

    def test_train_byte_identical(self, pipeline, tmp_path):
        args = ["train", "--features", str(pipeline / "features.csv"),
                "--embeddings", str(pipeline / "data" / "embeddings.csv"),
                "--labels", str(pipeline / "labels.csv"),
                "--epochs", "2", "--batch", "4", "--d-e", "8",
                "--lr", "1e-3", "--seed", "5"]
        m1, m2 = tmp_path / "a.fus1", tmp_path / "b.fus1"
        assert main(args + ["--out", str(m1)]) == 0
        assert main(args + ["--out", str(m2)]) == 0
        assert m1.read_bytes() == m2.read_bytes()

    def test_synth_deterministic(self, tmp_path):
        d1, d2 = tmp_path / "s1", tmp_path / "s2"
        for d in (d1, d2):
            assert main(["synth", "--out-dir", str(d), "--n", "3",
                         "--seed", "7"]) == 0
        assert (d1 / "manifest.csv").read_text() == \
            (d2 / "manifest.csv").read_text()
        assert (d1 / "embeddings.csv").read_bytes() == \
            (d2 / "embeddings.csv").read_bytes()


class TestFeatureDisable:
    def test_disable_feature_drops_columns(self, pipeline, tmp_path):
        out = tmp_path / "f95.csv"
        assert main(["extract",
                     "--manifest", str(pipeline / "data" / "manifest.csv"),
                     "--out", str(out),
                     "--disable-feature", "glcm.SumAverage",
                     "--disable-feature", "gldm.DependenceVariance"]) == 0
        rows = read_rows(out)
        assert len(rows[0]) == 96  # id + 95 features
        assert "glcm.SumAverage" not in rows[0]
        assert "gldm.DependenceVariance" not in rows[0]

    def test_unknown_feature_name_rejected(self, pipeline, tmp_path):
        assert main(["extract",
                     "--manifest", str(pipeline / "data" / "manifest.csv"),
                     "--out", str(tmp_path / "x.csv"),
                     "--disable-feature", "glcm.NoSuchThing"]) == 2


class TestExitCodes:
    def test_missing_manifest_is_io_error(self, tmp_path):
        assert main(["extract", "--manifest", str(tmp_path / "none.csv"),
                     "--out", str(tmp_path / "f.csv")]) == 1

    def test_bad_manifest_is_validation_error(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("id,image,mask,pixel_size_mm,hc_mm\na,i.png,m.png,,\n")
        assert main(["extract", "--manifest", str(p),
                     "--out", str(tmp_path / "f.csv")]) == 2

    def test_failed_run_leaves_no_output(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("id,image,mask,pixel_size_mm,hc_mm\na,i.png,m.png,0.1,\n")
        out = tmp_path / "f.csv"
        assert main(["extract", "--manifest", str(p), "--out", str(out)]) == 1
        assert not out.exists()

    def test_skip_errors_continues(self, pipeline, tmp_path):
        data = pipeline / "data"
        src = (data / "manifest.csv").read_text().splitlines()
        src.insert(1, "ghost,missing.png,missing.png,0.2,")
        p = tmp_path / "m.csv"
        # paths in the copied manifest must resolve against the data dir
        rows = [src[0]]
        for line in src[1:]:
            rid, image, mask, psz, hc = line.split(",")
            if rid != "ghost":
                image = str(data / image)
                mask = str(data / mask)
            rows.append(",".join([rid, image, mask, psz, hc]))
        p.write_text("\n".join(rows) + "\n")
        out = tmp_path / "f.csv"
        assert main(["extract", "--manifest", str(p), "--out", str(out),
                     "--skip-errors"]) == 0
        assert len(read_rows(out)) == 7  # header + 6 good rows

    def test_mismatched_embedding_id_rejected(self, pipeline, tmp_path):
        emb = (pipeline / "data" / "embeddings.csv").read_text().splitlines()
        header, first = emb[0], emb[1].split(",")
        first[0] = "stranger"
        p = tmp_path / "e.csv"
        p.write_text(header + "\n" + ",".join(first) + "\n")
        assert main(["predict", "--model", str(pipeline / "model.fus1"),
                     "--features", str(pipeline / "features.csv"),
                     "--embeddings", str(p),
                     "--out", str(tmp_path / "p.csv")]) == 2


class TestParallelExtract:
    def test_jobs_two_matches_serial(self, pipeline, tmp_path):
        out = tmp_path / "f_par.csv"
        assert main(["extract",
                     "--manifest", str(pipeline / "data" / "manifest.csv"),
                     "--out", str(out), "--jobs", "2"]) == 0
        assert out.read_bytes() == (pipeline / "features.csv").read_bytes()
