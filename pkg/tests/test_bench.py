import pytest

from clustseg.commands.bench import bench_records, parse_sizes
from clustseg.flops import flop_count


def test_parse_sizes():
    assert parse_sizes("32,48x64") == [(32, 32), (48, 64)]
    assert parse_sizes(" 8 , ") == [(8, 8)]
    with pytest.raises(ValueError):
        parse_sizes(",")
    with pytest.raises(ValueError):
        parse_sizes("axb")


def test_records_cover_every_combination():
    variants = ["recurrent", "stacked", "cross", "vanilla"]
    records = bench_records([(6, 8)], k=4, d=8, t_list=[1, 3], variants=variants, repeats=1, warmup=0)
    assert len(records) == 2 * len(variants)
    assert [(r["t"], r["variant"]) for r in records[:4]] == [(1, v) for v in variants]
    for r in records:
        assert r["hw"] == 48
        assert r["flops"] == flop_count(6, 8, 4, 8, r["t"], r["variant"])
        assert r["wall_time_s"] >= 0.0
    stacked = [r for r in records if r["variant"] == "stacked"]
    assert [r["extra_params"] for r in stacked] == [0, 2 * 64]


def test_vanilla_does_not_depend_on_t():
    records = bench_records([(5, 5)], k=3, d=4, t_list=[1, 2, 4], variants=["vanilla"], repeats=1, warmup=0)
    assert len({r["flops"] for r in records}) == 1
    assert len({r["wall_time_s"] for r in records}) == 1


def test_recurrent_flops_grow_with_t():
    records = bench_records([(8, 8)], k=4, d=8, t_list=[1, 2, 3], variants=["recurrent"], repeats=1, warmup=0)
    flops = [r["flops"] for r in records]
    assert flops[0] < flops[1] < flops[2]
    assert flops[2] - flops[1] == flops[1] - flops[0]


@pytest.mark.slow
def test_recurrent_beats_pixel_attention_at_128():
    records = bench_records([(128, 128)], k=32, d=64, t_list=[3], variants=["recurrent", "vanilla"], repeats=5, warmup=1)
    by_variant = {r["variant"]: r for r in records}
    assert by_variant["recurrent"]["flops"] < by_variant["vanilla"]["flops"]
    assert by_variant["recurrent"]["wall_time_s"] < by_variant["vanilla"]["wall_time_s"]
