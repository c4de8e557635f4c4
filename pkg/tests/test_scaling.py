from __future__ import annotations

import numpy as np
import pytest

from ovqite.exceptions import ValidationError
from ovqite.scaling import scaling_rows, term_rows


def rows_by_phase(rows):
    return {(row.label, row.phase): row for row in rows}


def test_vqite_rows():
    rows = rows_by_phase(scaling_rows([4], ["VQITE"], layers=1, shots=100))
    parameters = 8

    tensor = rows["VQITE", "G"]
    assert tensor.circuits_grouped == tensor.circuits_naive == 2 * parameters * 9
    gradient = rows["VQITE", "b"]
    assert gradient.circuits_grouped == 2 * parameters * 2
    assert gradient.circuits_naive == 2 * parameters * 8

    total = rows["VQITE", "total"]
    assert total.circuits_grouped == tensor.circuits_grouped + gradient.circuits_grouped
    assert total.measurements_per_n_grouped == pytest.approx(
        100 * total.circuits_grouped / 4
    )


def test_ovqite_rows():
    rows = rows_by_phase(scaling_rows([6], ["OVQITE_S_H"], layers=1))
    derivatives = rows["OVQITE_S_H", "M"]
    assert derivatives.circuits_grouped == 2 * 12 * 2
    assert derivatives.circuits_naive == 2 * 12 * 12
    assert rows["OVQITE_S_H", "v"].circuits_grouped >= 2


def test_rows_cover_every_size_and_label():
    rows = scaling_rows([4, 5], ["VQITE", "OVQITE_S_IM"], layers=1)
    assert [(row.n, row.label, row.phase) for row in rows] == [
        (4, "VQITE", "G"),
        (4, "VQITE", "b"),
        (4, "VQITE", "total"),
        (4, "OVQITE_S_IM", "M"),
        (4, "OVQITE_S_IM", "v"),
        (4, "OVQITE_S_IM", "total"),
        (5, "VQITE", "G"),
        (5, "VQITE", "b"),
        (5, "VQITE", "total"),
        (5, "OVQITE_S_IM", "M"),
        (5, "OVQITE_S_IM", "v"),
        (5, "OVQITE_S_IM", "total"),
    ]


def test_vqite_cost_per_site_grows_with_n():
    rows = [
        row
        for row in scaling_rows([4, 6, 8], ["VQITE"], layers=5)
        if row.phase == "total"
    ]
    per_site = [row.measurements_per_n_grouped for row in rows]
    assert per_site[0] < per_site[1] < per_site[2]


def test_unknown_label():
    with pytest.raises(ValidationError):
        scaling_rows([4], ["OVQITE_S_Q"])


@pytest.mark.parametrize("n", [4, 8, 12])
def test_term_rows(n):
    rows = {row.operator_set: row for row in term_rows([n], ["S_H", "S_NN", "S_IM"])}

    assert rows["S_H"].strings == 2 * n
    assert rows["S_H"].groups == 2
    assert rows["S_NN"].strings == 12 * n
    assert rows["S_IM"].strings == 7 * n
    assert rows["S_H"].anticommutator_strings > 0


@pytest.mark.parametrize("n", range(4, 13))
def test_group_counts(n):
    rows = {row.operator_set: row for row in term_rows([n], ["S_H", "S_IM"])}

    assert rows["S_H"].groups == 2
    if n % 2 == 0:
        assert rows["S_IM"].groups == 5
    else:
        assert 5 <= rows["S_IM"].groups <= 7

    expansion = rows["S_H"]
    assert 2 <= expansion.anticommutator_groups <= n + 2
    assert expansion.anticommutator_groups < expansion.anticommutator_strings


def test_anticommutator_strings_grow_quadratically():
    sizes = np.arange(4, 13)
    rows = term_rows(sizes.tolist(), ["S_H"])
    counts = np.array([row.anticommutator_strings for row in rows], dtype=float)

    fit = np.polyval(np.polyfit(sizes, counts, 2), sizes)
    residual = np.sum((counts - fit) ** 2)
    total = np.sum((counts - counts.mean()) ** 2)
    assert 1 - residual / total >= 0.99
    assert counts[-1] / counts[0] > 12 / 4
