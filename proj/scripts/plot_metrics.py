# Copyright 2026 The qdtn Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Plot the metric CSVs of one qdtn run directory.

    python scripts/plot_metrics.py runs/gan-product-<hash> [--out plots/]
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402


def read(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def plot_stage1(run: Path, out: Path) -> None:
    df = read(run / "stage1_generator.csv")
    ok = df[df.accepted == 1]
    fig, ax = plt.subplots()
    ax.plot(ok.epoch, ok.rms_after, marker="o")
    ax.set(xlabel="epoch", ylabel="batch RMS", title="Generator, common parameters")
    fig.savefig(out / "stage1_generator.png", dpi=120)
    plt.close(fig)


def plot_stage2(run: Path, out: Path) -> None:
    df = read(run / "stage2_styles.csv")
    fig, ax = plt.subplots()
    for _, g in df.groupby("real_index"):
        ax.plot(g.epoch, g.rms, color="tab:blue", alpha=0.15, lw=0.8)
    mean = df.groupby("epoch").rms.apply(lambda r: (r**2).mean() ** 0.5)
    ax.plot(mean.index, mean.values, color="black", lw=2, label="all reals")
    ax.set(xlabel="epoch", ylabel="RMS", title="Style network, per real")
    ax.legend()
    fig.savefig(out / "stage2_styles.png", dpi=120)
    plt.close(fig)


def plot_stage3(run: Path, out: Path) -> None:
    df = read(run / "stage3_discriminator.csv")
    fig, ax = plt.subplots()
    for col, label in [("real_pct_xx", "XX"), ("real_pct_yy", "YY"), ("real_pct_zz", "ZZ"),
                       ("real_pct_aggregate", "aggregate")]:
        ax.plot(df.epoch, df[col], label=label)
    ax.set(xlabel="epoch", ylabel="% reals classified real", ylim=(0, 100), title="Discriminator on reals")
    ax.legend()
    fig.savefig(out / "stage3_discriminator.png", dpi=120)
    plt.close(fig)


def plot_gan(run: Path, out: Path) -> None:
    df = read(run / "gan_metrics.csv")
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    for ax, col, title in [(axes[0], "real_pct", "reals correct"), (axes[1], "fake_pct", "fakes correct")]:
        for plane, g in df.groupby("plane"):
            ax.plot(g.epoch, g[col], label=plane, lw=2 if plane == "aggregate" else 1)
        ax.set(xlabel="GAN epoch", title=title, ylim=(0, 100))
    live = df[df.plane == "aggregate"]
    axes[0].plot(live.epoch, live.real_pct_live, "k--", label="aggregate (live)")
    axes[0].set_ylabel("%")
    axes[0].legend()
    fig.savefig(out / "gan_metrics.png", dpi=120)
    plt.close(fig)


def plot_classifier(run: Path, out: Path) -> None:
    agg = read(run / "classifier_aggregate.csv")
    fig, ax = plt.subplots()
    ax.plot(agg.epoch, agg.percent_correct, label="training")
    if "holdout_percent_correct" in agg:
        ax.plot(agg.epoch, agg.holdout_percent_correct, "--", label="hold-out (final network)")
    ax.set(xlabel="epoch", ylabel="% correct", ylim=(0, 105), title="Classifier accuracy")
    ax.legend()
    fig.savefig(out / "classifier_accuracy.png", dpi=120)
    plt.close(fig)

    per = read(run / "classifier_epochs.csv")
    last = per[per.epoch == per.epoch.max()]
    fig, ax = plt.subplots()
    for label, g in last.groupby("label"):
        ax.scatter(range(len(g)), g.output, label=label)
    for y, style in [(0.25, "k-"), (0.2, "m:"), (0.3375, "m:")]:
        ax.axhline(y, color=style[0], ls=style[1:])
    ax.set(xlabel="example", ylabel="tr(Z..Z rho)^2", ylim=(0, 1), title="Final outputs")
    ax.legend()
    fig.savefig(out / "classifier_outputs.png", dpi=120)
    plt.close(fig)


def plot_gradcheck(run: Path, out: Path) -> None:
    df = read(run / "gradcheck.csv")
    fig, ax = plt.subplots()
    for (lind, obj), g in df.groupby(["lindblad", "objective"]):
        ax.semilogy(g.network, g.max_relative_error, "o", label=f"{obj}, {'decay' if lind else 'unitary'}")
    ax.set(xlabel="network", ylabel="max relative error", title="Adjoint vs finite differences")
    ax.legend()
    fig.savefig(out / "gradcheck.png", dpi=120)
    plt.close(fig)


PLOTTERS = {
    "stage1_generator.csv": plot_stage1,
    "stage2_styles.csv": plot_stage2,
    "stage3_discriminator.csv": plot_stage3,
    "gan_metrics.csv": plot_gan,
    "classifier_aggregate.csv": plot_classifier,
    "gradcheck.csv": plot_gradcheck,
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("run", type=Path, help="run directory written by qdtn")
    ap.add_argument("--out", type=Path, help="output folder (default: <run>/plots)")
    args = ap.parse_args()
    out = args.out or args.run / "plots"
    out.mkdir(parents=True, exist_ok=True)
    done = []
    for name, fn in PLOTTERS.items():
        if (args.run / name).exists():
            fn(args.run, out)
            done.append(name)
    if not done:
        raise SystemExit(f"{args.run}: no qdtn metric CSVs found")
    print(f"wrote {len(done)} plot group(s) to {out}")


if __name__ == "__main__":
    main()
