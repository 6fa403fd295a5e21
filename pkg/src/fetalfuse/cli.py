"""Pipeline CLI: extract, label, train, predict, attribute, baseline, eval
and the hidden synth generator. Exit codes: 0 ok, 1 IO failure, 2 validation
failure."""
from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import baselines as bl
from . import evaluation as ev
from . import fusion as fu
from . import radiomics as rad
from . import synth
from .biometry import ga_from_hc, hc_from_mask
from .io import (
    atomic_write,
    load_manifest,
    load_masked_image,
    load_checkpoint,
    read_embeddings_csv,
    read_features_csv,
    save_checkpoint,
    write_features_csv,
)
from .types import Sample, ValidationError


def _fmt(x) -> str:
    return format(float(x), ".9g")


def _default_jobs():
    return int(os.environ.get("FETALFUSE_JOBS", "1"))


# ---------------------------------------------------------------------------
# stages

def _extract_row(args):
    row, bin_width, disabled = args
    img = load_masked_image(row.image_path, row.mask_path,
                            row.pixel_size_mm or 1.0, id=row.id)
    return row.id, rad.extract_all(img, bin_width=bin_width, disabled=disabled)


def cmd_extract(a):
    manifest = load_manifest(a.manifest)
    disabled = tuple(a.disable_feature or ())
    rad.canonical_feature_names(disabled)  # validate names up front
    tasks = [(row, a.bin_width, disabled) for row in manifest]
    if a.jobs > 1:
        with ProcessPoolExecutor(max_workers=a.jobs) as pool:
            futures = [pool.submit(_extract_row, t) for t in tasks]
            results = _collect((f.result for f in futures), manifest,
                               a.skip_errors)
    else:
        results = _collect((lambda t=t: _extract_row(t) for t in tasks),
                           manifest, a.skip_errors)
    write_features_csv(results, a.out)
    print(f"extracted {len(results)} / {len(manifest)} rows -> {a.out}",
          file=sys.stderr)


def _collect(thunks, manifest, skip_errors):
    out = []
    for row, thunk in zip(manifest, thunks):
        try:
            out.append(thunk())
        except (ValidationError, FileNotFoundError, OSError):
            if not skip_errors:
                raise
            print(f"skipping {row.id}", file=sys.stderr)
    return out


def cmd_label(a):
    manifest = load_manifest(a.manifest)
    rows = []
    for row in manifest:
        if row.hc_mm is not None:
            hc = row.hc_mm
        else:
            img = load_masked_image(row.image_path, row.mask_path,
                                    row.pixel_size_mm, id=row.id)
            hc = hc_from_mask(img.mask, img.pixel_size_mm)
        rows.append((row.id, hc, ga_from_hc(hc)))
    with atomic_write(a.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "hc_mm", "ga_days"])
        for rid, hc, ga in rows:
            w.writerow([rid, _fmt(hc), _fmt(ga)])
    print(f"labeled {len(rows)} rows -> {a.out}", file=sys.stderr)


def _read_labels(path) -> dict:
    out = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "id" not in reader.fieldnames \
                or "ga_days" not in reader.fieldnames:
            raise ValidationError(f"bad labels header in {path}")
        for rec in reader:
            out[rec["id"]] = float(rec["ga_days"])
    return out


def _base_id(eid: str) -> str:
    return eid.split("#")[0]


def cmd_train(a):
    features = dict(read_features_csv(a.features))
    embeddings = read_embeddings_csv(a.embeddings)
    labels = _read_labels(a.labels)

    usable = [e for e in embeddings
              if _base_id(e.id) in features and _base_id(e.id) in labels]
    if not usable:
        raise ValidationError("no joinable rows across features/embeddings/labels")

    rng = np.random.default_rng(a.seed)
    perm = rng.permutation(len(usable))
    n_val = int(round(a.val_fraction * len(usable)))
    val_set = {usable[i].id for i in perm[:n_val]}
    train_rows = [e for e in usable if e.id not in val_set]
    val_rows = [e for e in usable if e.id in val_set] or train_rows

    # standardizer statistics come from the training split only
    stats = rad.fit_standardizer(
        [features[_base_id(e.id)] for e in train_rows])

    def to_sample(e):
        v = rad.apply_standardizer(stats, features[_base_id(e.id)])
        return Sample(id=e.id, radiomics=v, embedding=e,
                      ga_days=labels[_base_id(e.id)])

    cfg = fu.TrainConfig(lr=a.lr, weight_decay=a.wd, batch_size=a.batch,
                         epochs=a.epochs, seed=a.seed, mode=a.fusion,
                         layer_norm=a.ln, d_e=a.d_e)
    model, history = fu.train([to_sample(e) for e in train_rows], cfg,
                              val_samples=[to_sample(e) for e in val_rows])
    model.scaler_mean = stats.mean
    model.scaler_std = stats.std
    model.feature_names = next(iter(features.values())).feature_names
    save_checkpoint(model.to_tensors(), a.out)
    hist_path = os.path.splitext(a.out)[0] + "_history.csv"
    with atomic_write(hist_path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_mae"])
        for epoch, loss, mae in history:
            w.writerow([epoch, _fmt(loss), _fmt(mae)])
    print(f"trained {cfg.epochs} epochs, best val MAE "
          f"{min(h[2] for h in history):.3f} d -> {a.out}", file=sys.stderr)


def _load_model(path):
    return fu.FusionModel.from_tensors(load_checkpoint(path))


def cmd_predict(a):
    model = _load_model(a.model)
    features = dict(read_features_csv(a.features))
    embeddings = read_embeddings_csv(a.embeddings)
    rows = []
    for e in embeddings:
        base = _base_id(e.id)
        if base not in features:
            raise ValidationError(f"no radiomics row for embedding id {e.id}")
        ga = model.predict_one(features[base].values, e.values)
        rows.append((e.id, ga))
    with atomic_write(a.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "ga_pred_days"])
        for rid, ga in rows:
            w.writerow([rid, _fmt(ga)])
    print(f"predicted {len(rows)} rows -> {a.out}", file=sys.stderr)


def cmd_attribute(a):
    model = _load_model(a.model)
    features = dict(read_features_csv(a.features))
    embeddings = {e.id: e for e in read_embeddings_csv(a.embeddings)}
    if a.id not in embeddings:
        raise ValidationError(f"unknown id {a.id}")
    base = _base_id(a.id)
    if base not in features:
        raise ValidationError(f"no radiomics row for id {a.id}")
    vec = features[base]
    model.feature_names = vec.feature_names
    trace = model.attribute(vec.values, embeddings[a.id].values, k=a.top_k)
    name_to_idx = {n: i for i, n in enumerate(vec.feature_names)}
    with atomic_write(a.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "feature", "score_attn", "score_grad", "rank"])
        for rank, (name, score) in enumerate(trace.top_k, start=1):
            gscore = trace.scores_grad[name_to_idx[name]]
            w.writerow([a.id, name, _fmt(score), _fmt(gscore), rank])
    for cls, total in sorted(trace.class_rollup.items()):
        print(f"{cls}: {total:.4g}", file=sys.stderr)


def cmd_baseline(a):
    features = read_features_csv(a.features)
    labels = _read_labels(a.labels)
    rows = [(rid, v) for rid, v in features if rid in labels]
    if len(rows) < 4:
        raise ValidationError("need at least 4 joinable rows")
    X = np.stack([v.values for _, v in rows])
    y = np.array([labels[rid] for rid, _ in rows])

    rng = np.random.default_rng(a.seed)
    perm = rng.permutation(len(y))
    n_test = max(1, int(round(0.3 * len(y))))
    test_idx, train_idx = perm[:n_test], perm[n_test:]

    scaler = rad.FeatureStandardizer().fit(X[train_idx])
    Xtr, Xte = scaler.transform(X[train_idx]), scaler.transform(X[test_idx])
    ytr, yte = y[train_idx], y[test_idx]

    if a.select == "lasso":
        kept = bl.lasso_select(Xtr, ytr, a.lasso_lambda).kept_indices
    elif a.select == "rfe":
        kept = bl.rfe_select(Xtr, ytr, a.rfe_count).kept_indices
    else:
        kept = tuple(range(X.shape[1]))
    Xtr, Xte = Xtr[:, kept], Xte[:, kept]

    model = bl.make_regressor(a.model)
    model.fit(Xtr, ytr)
    mae, mae_std, rmse, r2 = ev.metrics(yte, model.predict(Xte))
    with atomic_write(a.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "selector", "mae", "mae_std", "r2"])
        w.writerow([a.model, a.select, _fmt(mae), _fmt(mae_std), _fmt(r2)])
    print(f"{a.model}({a.select}): MAE {mae:.2f}+/-{mae_std:.2f} d, "
          f"R2 {r2:.3f}", file=sys.stderr)


def _read_predictions(path) -> dict:
    out = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "id" not in reader.fieldnames \
                or "ga_pred_days" not in reader.fieldnames:
            raise ValidationError(f"bad predictions header in {path}")
        for rec in reader:
            out[rec["id"]] = float(rec["ga_pred_days"])
    return out


def cmd_eval(a):
    preds = _read_predictions(a.pred)
    labels = _read_labels(a.labels)
    ids = sorted(i for i in preds if _base_id(i) in labels)
    if not ids:
        raise ValidationError("no joinable prediction/label ids")
    y = [labels[_base_id(i)] for i in ids]
    yhat = [preds[i] for i in ids]
    pvalue = None
    if a.pred_b:
        preds_b = _read_predictions(a.pred_b)
        common = [i for i in ids if i in preds_b]
        err_a = np.abs(np.array([preds[i] for i in common])
                       - np.array([labels[_base_id(i)] for i in common]))
        err_b = np.abs(np.array([preds_b[i] for i in common])
                       - np.array([labels[_base_id(i)] for i in common]))
        pvalue = ev.paired_significance(err_a, err_b, seed=a.seed)
    report = ev.make_report(ids, y, yhat, pvalue=pvalue)
    with atomic_write(a.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "mae", "mae_std", "rmse", "r2", "pvalue"])
        w.writerow([report.n, _fmt(report.mae), _fmt(report.mae_std),
                    _fmt(report.rmse), _fmt(report.r2),
                    _fmt(report.pvalue) if pvalue is not None else ""])
    print(f"n={report.n} MAE {report.mae:.3f}+/-{report.mae_std:.3f} d, "
          f"RMSE {report.rmse:.3f} d, R2 {report.r2:.3f}"
          + (f", p={report.pvalue:.4g}" if pvalue is not None else ""))


def cmd_synth(a):
    path = synth.generate_dataset(a.out_dir, n_images=a.n, size=a.size,
                                  pixel_size_mm=a.pixel_size, seed=a.seed)
    print(f"synthetic dataset -> {path}", file=sys.stderr)


# ---------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="fetalfuse",
                                 description="GA estimation pipeline")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="manifest -> features.csv")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bin-width", type=float, default=25.0)
    p.add_argument("--disable-feature", action="append", metavar="NAME")
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.add_argument("--skip-errors", action="store_true")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("label", help="manifest -> labels.csv")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("train", help="fit the fusion model")
    p.add_argument("--features", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=1e-5)
    p.add_argument("--wd", type=float, default=1e-6)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--fusion", choices=["xa", "concat"], default="xa")
    p.add_argument("--ln", action="store_true",
                   help="layer-normalize inputs before the projections")
    p.add_argument("--d-e", type=int, default=512)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="model + features + embeddings -> GA")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("attribute", help="top-k radiomic feature attribution")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_attribute)

    p = sub.add_parser("baseline", help="classical regressor on radiomics only")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--model", choices=["ridge", "knn", "gbr"], required=True)
    p.add_argument("--select", choices=["none", "lasso", "rfe"], default="none")
    p.add_argument("--lasso-lambda", type=float, default=1.0)
    p.add_argument("--rfe-count", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("eval", help="score predictions against labels")
    p.add_argument("--pred", required=True)
    p.add_argument("--pred-b", default=None,
                   help="second prediction file for paired significance")
    p.add_argument("--labels", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--pixel-size", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
