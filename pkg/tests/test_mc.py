import io
import math

import numpy as np
import pytest

from pssmp.conditioned import bessel3_lamperti_model
from pssmp.levy import make_model
from pssmp.limits import ErrorRecord
from pssmp.mc import (
    ExperimentConfig,
    ReplicationError,
    csv_emit,
    run_experiment,
    summarize,
    trimmed_histogram,
)

from conftest import model


def small(**kw):
    base = dict(model=bessel3_lamperti_model(), alpha=2.0, times=(0.5, 1.0), n_list=(10, 100), N=2000,
                replications=6, master_seed=3)
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfig:
    def test_divisibility(self):
        with pytest.raises(ValueError):
            small(N=1500, n_list=(7,))

    def test_replications_positive(self):
        with pytest.raises(ValueError):
            small(replications=0)

    def test_to_dict_is_plain(self):
        d = small().to_dict()
        assert d["model"]["kind"] == "brownian_drift" and d["scheme"] == "left_riemann"


class TestRun:
    def test_order_and_shape(self):
        res = run_experiment(small())
        assert len(res.records) == 6 * 2 * 2
        assert [(r.rep, r.n, r.t) for r in res.records[:4]] == [(0, 10, 0.5), (0, 10, 1.0), (0, 100, 0.5), (0, 100, 1.0)]
        assert res.column("L_r", 10, 1.0).shape == (6,)
        with pytest.raises(KeyError):
            res.column("nope", 10, 1.0)

    def test_determinism_single_replication(self):
        a = run_experiment(small(replications=1)).records
        b = run_experiment(small(replications=1)).records
        assert a == b

    def test_independent_of_worker_count(self):
        a = run_experiment(small()).records
        b = run_experiment(small(), workers=3).records
        assert a == b

    def test_replication_prefix_stability(self):
        """Replication i does not depend on how many replications run."""
        a = run_experiment(small(replications=3)).records
        b = run_experiment(small()).records
        assert a == b[: len(a)]

    def test_zero_model_errors_vanish(self):
        res = run_experiment(small(model=model("zero")))
        for r in res.records:
            assert r.prelimit_tau_err == 0 and r.L_r == 0 and r.prelimit_rel_err == 0 and r.limit_rel_err == 0

    def test_error_carries_replication(self):
        m = make_model({"kind": "brownian_drift", "mu": -3.0, "sigma": 0.1})
        with pytest.raises(ReplicationError) as e:
            run_experiment(small(model=m, horizon_cap=8.0))
        assert e.value.rep == 0

    def test_stable_prelimit_only(self):
        res = run_experiment(small(model=model("stable15"), alpha=1.5, replications=3))
        assert np.all(np.isnan(res.column("L_r", 10, 1.0)))
        rows = summarize(res)
        assert math.isnan(rows[0]["ks_prelimit_tau_err"]) and math.isfinite(rows[0]["ks_frac_uniform"])


class TestCsv:
    def test_empty_records_header_only(self, tmp_path):
        p = tmp_path / "e.csv"
        csv_emit([], p)
        assert p.read_text() == ",".join(ErrorRecord.field_names()) + "\n"

    def test_histogram_columns(self):
        h = trimmed_histogram(np.arange(10.0), np.arange(10.0))
        text = csv_emit(h)
        assert text.splitlines()[0] == "bin_left,bin_right,count_a,count_b"
        assert len(text.splitlines()) == 61

    def test_round_trip_and_byte_identical(self, tmp_path):
        res = run_experiment(small(replications=2))
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        csv_emit(res.records, a)
        csv_emit(res.records, b)
        assert a.read_bytes() == b.read_bytes()
        lines = a.read_text().splitlines()
        header = lines[0].split(",")
        first = dict(zip(header, lines[1].split(",")))
        assert float(first["L_r"]) == res.records[0].L_r

    def test_file_object(self):
        buf = io.StringIO()
        csv_emit([{"a": 0.1}], buf)
        assert buf.getvalue() == "a\n0.10000000000000001\n"

    def test_unwritable(self, tmp_path):
        with pytest.raises(OSError) as e:
            csv_emit([{"a": 1}], tmp_path / "missing" / "x.csv")
        assert "missing" in str(e.value)
