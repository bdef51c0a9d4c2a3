import numpy as np
import pytest

import softcheck as sc
from softcheck.data import PARTITION_TAGS, noiseless_targets


def tiny_spec(**kwargs):
    defaults = dict(d=3, k=2, n_id=120, n_ood=60, function_seed=5, noise_sd=0.01)
    defaults.update(kwargs)
    return sc.SynthSpec(**defaults)


def test_synth_counts_and_tags():
    ds = sc.synth_generate(tiny_spec())
    assert ds.n == 180
    assert ds.count("unsplit") == 120
    assert ds.count("ood") == 60
    assert ds.d == 3 and ds.k == 2


def test_synth_halfspace_separation_exact():
    spec = tiny_spec()
    ds = sc.synth_generate(spec)
    proj = np.einsum("ij,j->i", ds.inputs, spec.plane_normal, optimize=False)
    id_side = ds.partition == "unsplit"
    assert np.all(proj[id_side] <= spec.plane_offset)
    assert np.all(proj[~id_side] > spec.plane_offset)


def test_synth_deterministic():
    a = sc.synth_generate(tiny_spec())
    b = sc.synth_generate(tiny_spec())
    assert a.inputs.tobytes() == b.inputs.tobytes()
    assert a.targets.tobytes() == b.targets.tobytes()
    c = sc.synth_generate(tiny_spec(function_seed=6))
    assert a.inputs.tobytes() != c.inputs.tobytes()


def test_synth_ood_rows_use_same_target_map():
    # regenerating without noise isolates g(x); inputs are unchanged
    # because the noise stream is separate
    noisy = sc.synth_generate(tiny_spec())
    clean = sc.synth_generate(tiny_spec(noise_sd=0.0))
    assert noisy.inputs.tobytes() == clean.inputs.tobytes()
    ood_mask = clean.partition == "ood"
    expected = noiseless_targets(tiny_spec(), clean.inputs[ood_mask])
    assert np.array_equal(clean.targets[ood_mask], expected)
    # and the noisy targets sit close to g on both sides
    assert np.max(np.abs(noisy.targets - clean.targets)) < 0.1


def test_synth_noise_zero_reproducible():
    a = sc.synth_generate(tiny_spec(noise_sd=0.0))
    b = sc.synth_generate(tiny_spec(noise_sd=0.0))
    assert a.targets.tobytes() == b.targets.tobytes()


def test_synth_inputs_stay_in_base_box():
    ds = sc.synth_generate(tiny_spec())
    assert np.all(ds.inputs >= -1.0) and np.all(ds.inputs <= 1.0)


def test_synth_impossible_halfspace_errors():
    # plane far outside the base box leaves the OOD side empty
    with pytest.raises(sc.ConfigError):
        sc.synth_generate(tiny_spec(n_id=4, n_ood=4, plane_offset=50.0))


def test_synth_spec_validation():
    with pytest.raises(sc.ConfigError):
        tiny_spec(d=0)
    with pytest.raises(sc.ConfigError):
        tiny_spec(noise_sd=-0.1)
    with pytest.raises(sc.ConfigError):
        tiny_spec(plane_normal=np.zeros(3))
    with pytest.raises(sc.ConfigError):
        tiny_spec(plane_normal=np.ones(4))


def test_dataset_validation(rng):
    x = rng.normal(size=(5, 2))
    y = rng.normal(size=(5, 3))
    tags = np.array(["unsplit"] * 5)
    with pytest.raises(sc.DataError):
        sc.LabeledDataset(x, rng.normal(size=(4, 3)), tags)
    with pytest.raises(sc.DataError):
        sc.LabeledDataset(x, y, np.array(["unsplit"] * 4))
    with pytest.raises(sc.DataError):
        sc.LabeledDataset(x, y, np.array(["unsplit"] * 4 + ["mystery"]))
    bad = y.copy()
    bad[0, 0] = np.nan
    with pytest.raises(sc.DataError):
        sc.LabeledDataset(x, bad, tags)
    with pytest.raises(sc.DataError):
        sc.LabeledDataset(np.empty((0, 2)), np.empty((0, 3)), np.array([], dtype="U16"))


def test_dataset_helpers(rng):
    x = rng.normal(size=(6, 2))
    y = rng.normal(size=(6, 1))
    tags = np.array(["unsplit"] * 4 + ["ood"] * 2)
    ds = sc.LabeledDataset(x, y, tags)
    assert ds.count("ood") == 2
    ood = ds.select("ood")
    assert ood.n == 2
    assert np.array_equal(ood.inputs, x[4:])
    retagged = ood.with_partition("validation")
    assert set(retagged.partition) == {"validation"}
    with pytest.raises(sc.DataError):
        ds.select("train")


def test_csv_round_trip(tmp_path, rng):
    for trial in range(5):
        n = int(rng.integers(1, 40))
        d = int(rng.integers(1, 5))
        k = int(rng.integers(1, 5))
        # extreme magnitudes exercise the repr round trip
        x = rng.normal(size=(n, d)) * 10.0 ** rng.integers(-12, 12)
        y = rng.normal(size=(n, k)) * 10.0 ** rng.integers(-12, 12)
        tags = rng.choice(np.array(PARTITION_TAGS), size=n)
        ds = sc.LabeledDataset(x, y, tags)
        path = tmp_path / f"ds_{trial}.csv"
        sc.save_csv(ds, path)
        loaded = sc.load_csv(path)
        assert loaded.inputs.tobytes() == ds.inputs.tobytes()
        assert loaded.targets.tobytes() == ds.targets.tobytes()
        assert np.array_equal(loaded.partition, ds.partition)


def test_csv_header_written(tmp_path):
    ds = sc.synth_generate(tiny_spec(n_id=2, n_ood=1))
    path = tmp_path / "ds.csv"
    sc.save_csv(ds, path)
    header = path.read_text(encoding="utf-8").splitlines()[0]
    assert header == "partition,x_0,x_1,x_2,y_0,y_1"


def test_csv_parse_errors_name_lines(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("partition,x_0,y_0\nunsplit,1.0\n", encoding="utf-8")
    with pytest.raises(sc.ParseError, match="line 2"):
        sc.load_csv(path)
    path.write_text("partition,x_0,y_0\nunsplit,1.0,oops\n", encoding="utf-8")
    with pytest.raises(sc.ParseError, match="line 2"):
        sc.load_csv(path)
    path.write_text("partition,x_0,y_0\nwhatever,1.0,2.0\n", encoding="utf-8")
    with pytest.raises(sc.ParseError, match="line 2"):
        sc.load_csv(path)
    path.write_text("wrong,x_0,y_0\n", encoding="utf-8")
    with pytest.raises(sc.ParseError, match="line 1"):
        sc.load_csv(path)
    path.write_text("partition,x_0,y_0\n", encoding="utf-8")
    with pytest.raises(sc.DataError):
        sc.load_csv(path)
