import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np
import pandas as pd

from dynmix.errors import DataError
from dynmix.models import ChainStore
from dynmix.services import csv_store
from dynmix.services.synthdata import SyntheticData


def small_store(label: str = "alpha") -> ChainStore:
    return ChainStore(
        mode="mixture",
        link="logit",
        iterations=30,
        burn_in=10,
        thin=4,
        scalars={"mu_1": np.array([0.1, 0.2, 1.0 / 3.0]), "W_1": np.array([1e-8, 2.5, 7.0])},
        alpha=np.array([[0.1, 0.9], [0.2, 0.8], [1.0 / 7.0, 0.5]]),
        curve_label=label,
    )


class SeriesTests(unittest.TestCase):
    def test_data_file_round_trip_is_exact(self):
        with TemporaryDirectory() as tmp:
            y = np.array([0.1, -2.0 / 3.0, 1e-300, 123456.789])
            path = csv_store.write_data(Path(tmp) / "data.csv", y)
            np.testing.assert_array_equal(csv_store.read_series(path), y)
            self.assertFalse(path.with_suffix(".csv.tmp").exists())

    def test_headerless_columns(self):
        with TemporaryDirectory() as tmp:
            single = Path(tmp) / "single.csv"
            single.write_text("0.5\n1.5\n-2\n", encoding="utf-8")
            np.testing.assert_array_equal(csv_store.read_series(single), [0.5, 1.5, -2.0])
            pair = Path(tmp) / "pair.csv"
            pair.write_text("1,3\n2,4\n", encoding="utf-8")
            np.testing.assert_array_equal(csv_store.read_series(pair), [3.0, 4.0])

    def test_malformed_inputs(self):
        cases = {
            "wide.csv": "a,b,c\n1,2,3\n",
            "text.csv": "y\n1\nabc\n",
            "missing.csv": "index,y\n1,0.5\n2,\n",
            "empty.csv": "",
            "header_only.csv": "index,y\n",
        }
        with TemporaryDirectory() as tmp:
            for name, content in cases.items():
                path = Path(tmp) / name
                path.write_text(content, encoding="utf-8")
                with self.assertRaises(DataError, msg=name):
                    csv_store.read_series(path)

    def test_absent_file(self):
        with TemporaryDirectory() as tmp:
            with self.assertRaises(DataError):
                csv_store.read_series(Path(tmp) / "nope.csv")

    def test_truth_file_columns(self):
        with TemporaryDirectory() as tmp:
            data = SyntheticData(y=np.array([0.3, 2.1]), alpha=np.array([0.2, 0.8]), z=np.array([0, 1], dtype=np.int8))
            frame = pd.read_csv(csv_store.write_truth(Path(tmp) / "truth.csv", data))
            self.assertEqual(list(frame.columns), ["index", "alpha", "z"])
            self.assertEqual(frame["z"].tolist(), [0, 1])
            without_z = pd.read_csv(
                csv_store.write_truth(Path(tmp) / "t2.csv", SyntheticData(y=data.y, alpha=data.alpha))
            )
            self.assertEqual(list(without_z.columns), ["index", "alpha"])


class ChainFileTests(unittest.TestCase):
    def test_chain_layout_and_round_trip(self):
        with TemporaryDirectory() as tmp:
            store = small_store()
            path = csv_store.write_chain(Path(tmp) / "chain.csv", store)
            frame = pd.read_csv(path)
            self.assertEqual(list(frame.columns), ["draw", "iteration", "mu_1", "W_1"])
            self.assertEqual(frame["iteration"].tolist(), [14, 18, 22])
            scalars = csv_store.read_chain(path)
            self.assertEqual(list(scalars), ["mu_1", "W_1"])
            for name, draws in store.scalars.items():
                np.testing.assert_array_equal(scalars[name], draws)

    def test_chain_schema_errors(self):
        with TemporaryDirectory() as tmp:
            empty = Path(tmp) / "empty.csv"
            empty.write_text("", encoding="utf-8")
            no_draws = Path(tmp) / "no_draws.csv"
            no_draws.write_text("draw,iteration,mu_1\n", encoding="utf-8")
            foreign = Path(tmp) / "foreign.csv"
            foreign.write_text("index,y\n1,2\n", encoding="utf-8")
            for path in (empty, no_draws, foreign):
                with self.assertRaises(DataError, msg=path.name) as ctx:
                    csv_store.read_chain(path)
                self.assertEqual(ctx.exception.code, "SCHEMA")

    def test_curve_draws_round_trip(self):
        with TemporaryDirectory() as tmp:
            store = small_store("level")
            path = csv_store.write_curve_draws(Path(tmp) / "alpha.csv", store)
            self.assertEqual(list(pd.read_csv(path).columns), ["draw", "iteration", "level_1", "level_2"])
            label, draws = csv_store.read_curve_draws(path)
            self.assertEqual(label, "level")
            np.testing.assert_array_equal(draws, store.alpha)

    def test_curve_summary_is_not_a_draws_file(self):
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "alpha.csv"
            path.write_text("index,median,lower,upper\n1,0.5,0.4,0.6\n", encoding="utf-8")
            with self.assertRaises(DataError):
                csv_store.read_curve_draws(path)
            gapped = Path(tmp) / "gapped.csv"
            gapped.write_text("draw,iteration,alpha_1,alpha_3\n1,2,0.5,0.5\n", encoding="utf-8")
            with self.assertRaises(DataError):
                csv_store.read_curve_draws(gapped)

    def test_summary_round_trip(self):
        with TemporaryDirectory() as tmp:
            frame = pd.DataFrame(
                {"quantity": ["mu_1", "alpha_1"], "point": [0.25, 0.5], "lower": [0.1, 0.4], "upper": [0.3, 0.6]}
            )
            path = csv_store.write_summary(Path(tmp) / "summary.csv", frame)
            pd.testing.assert_frame_equal(csv_store.read_summary(path), frame)
            bad = Path(tmp) / "bad.csv"
            bad.write_text("name,value\nmu_1,1\n", encoding="utf-8")
            with self.assertRaises(DataError):
                csv_store.read_summary(bad)


def test_checksum_tracks_content(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("1\n2\n", encoding="utf-8")
    first = csv_store.file_checksum(path)
    assert first == csv_store.file_checksum(path)
    assert len(first) == 64
    path.write_text("1\n3\n", encoding="utf-8")
    assert csv_store.file_checksum(path) != first


def test_output_names():
    assert csv_store.output_name("chain") == "chain.csv"
    assert csv_store.output_name("alpha", 2) == "alpha_chain2.csv"
