"""SVG figures."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import seaborn as sns  # noqa: E402
from loguru import logger  # noqa: E402

from glpp.growth import ShapeProfile, geometric_shape  # noqa: E402


def reference_curve(p: float, n_points: int = 200) -> pd.DataFrame:
    """Level set {shape = 1} of the classical geometric limit shape, by direction."""
    theta = np.linspace(0.0, np.pi / 2, n_points)
    cx, cy = np.cos(theta), np.sin(theta)
    r = 1.0 / geometric_shape(cx, cy, p)
    return pd.DataFrame({"x_scaled": r * cx, "y_scaled": r * cy})


def plot_shape_profile(profile: ShapeProfile, output_file: Path, p: Optional[float] = None) -> Path:
    """Scaled front of {τ <= n} with the limit shape overlaid when known."""
    logger.info(f"Generating shape profile plot: {output_file}")
    sns.set_theme(style="whitegrid", palette="Set2")
    fig, ax = plt.subplots(figsize=(6, 6))
    sns.lineplot(
        data=profile.points,
        x="x_scaled",
        y="y_scaled",
        drawstyle="steps-post",
        label=f"front at n={profile.n:g}",
        ax=ax,
    )
    if p is not None:
        curve = reference_curve(p)
        sns.lineplot(data=curve, x="x_scaled", y="y_scaled", color="black", linestyle="--", label="limit shape", ax=ax)
    ax.set_xlabel("x / n")
    ax.set_ylabel("y / n")
    ax.set_aspect("equal")
    ax.set_xlim(left=0)
    ax.set_ylim(bottom=0)
    title = "Quarter-plane front"
    if profile.deviation is not None:
        title += f" (max deviation {profile.deviation:.3f})"
    ax.set_title(title, fontsize=12, fontweight="bold")
    output_file = Path(output_file)
    output_file.parent.mkdir(parents=True, exist_ok=True)
    plt.tight_layout()
    plt.savefig(output_file, format="svg", bbox_inches="tight")
    plt.close(fig)
    return output_file


def plot_bridge_law(frame: pd.DataFrame, output_file: Path) -> Path:
    """Bar chart of one or more bridge laws (``source`` as hue)."""
    logger.info(f"Generating bridge law plot: {output_file}")
    sns.set_theme(style="whitegrid", palette="Set2")
    width = max(6.0, 0.4 * frame["bridge"].nunique())
    fig, ax = plt.subplots(figsize=(width, 4))
    sns.barplot(data=frame, x="bridge", y="probability", hue="source", ax=ax)
    ax.set_xlabel("")
    ax.set_ylabel("probability")
    ax.tick_params(axis="x", labelrotation=90)
    output_file = Path(output_file)
    output_file.parent.mkdir(parents=True, exist_ok=True)
    plt.tight_layout()
    plt.savefig(output_file, format="svg", bbox_inches="tight")
    plt.close(fig)
    return output_file
