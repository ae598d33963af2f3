import json
from pathlib import Path
from typing import List, Tuple

import numpy as np

from bipolarqtm.propagator import MINUS, PLUS, BipolarState

SIGN_TAGS = {PLUS: "p", MINUS: "m"}


def save_json(data, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def load_json(path):
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def snapshot_columns(n_surfaces: int) -> List[str]:
    names = ["x"]
    for i in range(1, n_surfaces + 1):
        for sign in (PLUS, MINUS):
            tag = f"{i}{SIGN_TAGS[sign]}"
            names += [f"psi{tag}_re", f"psi{tag}_im"]
        names += [f"rho{i}p", f"rho{i}m", f"rho{i}"]
        for sign in (PLUS, MINUS):
            tag = f"{i}{SIGN_TAGS[sign]}"
            names += [f"Psi{tag}_re", f"Psi{tag}_im"]
    return names


def snapshot_table(state: BipolarState) -> np.ndarray:
    psi = state.components
    integrals = state.integrals()
    rho = np.abs(psi) ** 2
    total = np.abs(state.totals()) ** 2
    columns = [state.grid.x]
    for i in range(state.n_surfaces):
        for sign in (PLUS, MINUS):
            columns += [psi[i, sign].real, psi[i, sign].imag]
        columns += [rho[i, PLUS], rho[i, MINUS], total[i]]
        for sign in (PLUS, MINUS):
            columns += [integrals[i, sign].real, integrals[i, sign].imag]
    return np.column_stack(columns)


def write_snapshot_csv(state: BipolarState, path, digits: int = 17) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(
        path,
        snapshot_table(state),
        fmt=f"%.{digits}g",
        delimiter=",",
        header=",".join(snapshot_columns(state.n_surfaces)),
        comments="",
    )
    return path


def write_snapshot_series(states, directory, digits: int = 17) -> List[Path]:
    directory = Path(directory)
    return [
        write_snapshot_csv(state, directory / f"snapshot_{k:05d}.csv", digits)
        for k, state in enumerate(states)
    ]


def write_field_csv(x: np.ndarray, fields: np.ndarray, path, digits: int = 17) -> Path:
    """x plus Re/Im of one total wavefunction per surface."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fields = np.atleast_2d(fields)
    columns, names = [x], ["x"]
    for i, row in enumerate(fields, start=1):
        columns += [row.real, row.imag]
        names += [f"psi{i}_re", f"psi{i}_im"]
    np.savetxt(path, np.column_stack(columns), fmt=f"%.{digits}g", delimiter=",",
               header=",".join(names), comments="")
    return path


def read_snapshot_csv(path) -> Tuple[List[str], np.ndarray]:
    with open(path, 'r', encoding='utf-8') as f:
        header = f.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
