import numpy as np
import pytest

from curveq.errors import DataFormatError, RankDeficiencyError
from curveq.fitting import fit
from curveq.io import band_csv, dataset_csv, ingest_dataset, parse_dataset, write_dataset
from curveq.models import DoseRange
from curveq.scenarios import scenario4
from curveq.similarity import band
from curveq.simulation import generate_data, replication_rng


def test_three_row_file():
    g1, g2 = parse_dataset("group,dose,response\ng1,0,0.1\ng1,1,0.9\ng2,0,0.2\n")
    assert (g1.label, g1.n_total) == ("g1", 2)
    assert (g2.label, g2.n_total) == ("g2", 1)
    np.testing.assert_array_equal(g1.dose_levels, [0, 1])


def test_columns_in_any_order_and_extra_columns():
    g1, g2 = parse_dataset("subject,response,dose,group\n1,0.5,2,a\n2,0.7,0,b\n3,0.1,0,a\n")
    np.testing.assert_array_equal(g1.dose_levels, [0, 2])
    assert g2.responses[0][0] == 0.7


def test_rows_are_preserved_and_sorted_by_dose():
    text = "group,dose,response\n" + "".join(f"{'ab'[i % 2]},{4 - i % 5},{i}\n" for i in range(40))
    g1, g2 = parse_dataset(text)
    assert g1.n_total + g2.n_total == 40
    assert np.all(np.diff(g1.dose_levels) > 0)


def test_single_observation_group_is_ingested_but_cannot_be_fitted():
    g1, g2 = parse_dataset("group,dose,response\na,0,1\na,1,2\na,2,3\nb,0,1\n")
    assert g2.n_total == 1
    with pytest.raises(RankDeficiencyError):
        fit(g2, "linear")


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        ("grp,dose,response\na,0,1\n", 1, "missing column"),
        ("group,dose,response\na,0,1\nb,zero,1\n", 3, "non-numeric dose"),
        ("group,dose,response\na,0,1\nb,0,x\n", 3, "non-numeric response"),
        ("group,dose,response\na,0,1\nb,0,1\nc,0,1\n", 4, "third group"),
        ("group,dose,response\na,0,1\na,1,nan\n", 3, "not finite"),
    ],
)
def test_parse_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(DataFormatError, match=fragment) as exc:
        parse_dataset(text)
    assert exc.value.line == line
    assert str(exc.value).startswith(f"line {line}:")


def test_one_group_is_an_error():
    with pytest.raises(DataFormatError, match="exactly two groups"):
        parse_dataset("group,dose,response\na,0,1\na,1,2\n")


def test_empty_file():
    with pytest.raises(DataFormatError):
        parse_dataset("")


def test_generated_data_round_trips_bit_exactly(tmp_path):
    ds = generate_data(scenario4(n=150), replication_rng(77, 0))
    path = tmp_path / "data.csv"
    write_dataset(path, *ds)
    back = ingest_dataset(path)
    for a, b in zip(ds, back):
        assert a.label == b.label
        np.testing.assert_array_equal(a.dose_levels, b.dose_levels)
        for r, q in zip(a.responses, b.responses):
            assert r.tobytes() == q.tobytes()
    assert dataset_csv(*back) == path.read_text()


def test_missing_file():
    with pytest.raises(DataFormatError, match="cannot read"):
        ingest_dataset("/nonexistent/data.csv")


def test_band_csv_layout():
    ds = generate_data(scenario4(n=150), replication_rng(1, 0))
    b = band(fit(ds[0], "emax"), fit(ds[1], "linear"), DoseRange(0, 4, 11))
    lines = band_csv(b).splitlines()
    assert lines[0] == "dose,diff,lower,upper"
    assert len(lines) == 12
    dose, diff, lo, hi = map(float, lines[5].split(","))
    assert (dose, diff, lo, hi) == (b.grid[4], b.diff_hat[4], b.lower[4], b.upper[4])
