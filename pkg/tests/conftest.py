"""Shared fixtures: synthetic cohorts and clinical-table files."""

import json

import numpy as np
import pytest

from survkit import Dataset


def make_dataset(times, events, x, names=None) -> Dataset:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] != len(times):
        x = x.T
    names = names or tuple(f"x{j}" for j in range(x.shape[1]))
    return Dataset.from_arrays(times, events, x, names)


def strong_signal_cohort(n: int, seed: int) -> Dataset:
    """Failure times driven by the first of three features, light censoring."""
    rng = np.random.default_rng(seed)
    x = rng.random((n, 3))
    t = np.exp(-4.0 * x[:, 0]) * np.exp(rng.normal(0.0, 0.3, n)) * 1000.0
    cens = np.quantile(t, 0.9)
    times = np.minimum(t, cens)
    events = t <= cens
    return Dataset.from_arrays(times, events, x, ("x0", "x1", "x2"))


def write_fixture_tables(directory, n=140, seed=2024):
    """Synthetic survival + clinical tables shaped like the real inputs.

    Includes missing labels, invalid event codes, an extreme follow-up
    outlier, an all-empty column, partially missing numeric features, and
    sample-id mismatches between the two tables.
    """
    rng = np.random.default_rng(seed)
    ids = [f"TCGA-{i:04d}-01" for i in range(n)]
    gender = rng.choice(["MALE", "FEMALE"], n, p=[0.6, 0.4])
    age = rng.integers(35, 88, n)
    residual = rng.choice(["R0", "R1", "R2", "RX"], n, p=[0.66, 0.14, 0.08, 0.12])
    pfi = np.round(rng.exponential(600.0, n) + 30.0, 0)
    os_time = np.round(pfi * rng.uniform(1.0, 1.7, n) + rng.exponential(80.0, n), 0)
    event = rng.random(n) < 0.38
    new_tumor = np.round(pfi * rng.uniform(0.7, 1.2, n), 0)

    missing_os_time = set(rng.choice(n, 6, replace=False).tolist())
    bad_event = set(rng.choice(sorted(set(range(n)) - missing_os_time), 2, replace=False).tolist())
    missing_age = set(rng.choice(n, 12, replace=False).tolist())
    missing_new_tumor = set(rng.choice(n, 30, replace=False).tolist())
    missing_residual = set(rng.choice(n, 10, replace=False).tolist())
    outlier_row = next(i for i in range(n) if i not in missing_os_time and i not in bad_event)
    survival_only = set(rng.choice(n, 3, replace=False).tolist())

    survival_path = directory / "survival.txt"
    with open(survival_path, "w") as fh:
        fh.write("sample\tOS\tOS.time\tPFI\tPFI.time\n")
        for i in range(n):
            os_cell = "" if i in missing_os_time else f"{os_time[i]:.0f}"
            if i == outlier_row:
                os_cell = "90000"
            ev_cell = "2" if i in bad_event else f"{int(event[i])}"
            fh.write(f"{ids[i]}\t{ev_cell}\t{os_cell}\t{int(pfi[i] < os_time[i])}\t{pfi[i]:.0f}\n")

    clinical_path = directory / "clinicalMatrix.tsv"
    with open(clinical_path, "w") as fh:
        fh.write(
            "sampleID\tage_at_diagnosis\tdays_to_new_tumor_event\tgender\t"
            "residual_tumor\tempty_notes\textra_marker\n"
        )
        for i in range(n):
            if i in survival_only:
                continue
            age_cell = "NA" if i in missing_age else str(int(age[i]))
            nt_cell = "[Not Available]" if i in missing_new_tumor else f"{new_tumor[i]:.0f}"
            res_cell = "" if i in missing_residual else residual[i]
            fh.write(
                f"{ids[i]}\t{age_cell}\t{nt_cell}\t{gender[i]}\t{res_cell}\t\t"
                f"{rng.integers(0, 5)}\n"
            )
        for j in range(2):  # clinical-only rows never join
            fh.write(f"TCGA-X{j:03d}-01\t60\t100\tMALE\tR0\t\t1\n")

    return survival_path, clinical_path


@pytest.fixture
def fixture_tables(tmp_path):
    return write_fixture_tables(tmp_path)


@pytest.fixture
def cli_config(tmp_path, fixture_tables):
    survival_path, clinical_path = fixture_tables
    config = {
        "survival_path": str(survival_path),
        "clinical_path": str(clinical_path),
        "out_dir": str(tmp_path / "out"),
        "seed": 17,
        "rsf": {"n_trees": 25, "min_samples_split": 8, "min_samples_leaf": 4},
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    return path
