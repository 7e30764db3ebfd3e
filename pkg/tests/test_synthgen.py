import itertools

import pytest

from tpamtl.errors import UnrealizableTemplate, ValidationError
from tpamtl.intervals import AllenRelation, allen_relation
from tpamtl.patterns import MiningConfig, TemporalPattern, find_instances, mine, pattern_support
from tpamtl.synthgen import (
    ClassTemplate,
    XorShift64Star,
    benchmark_templates,
    canonical_form,
    generate,
    realize,
    separable_templates,
    splitmix64,
)

R = AllenRelation


def test_prng_reference_values():
    # splitmix64 reference output for seed 0 and the first xorshift64* outputs
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    rng = XorShift64Star(0)
    first = [rng.next_u64() for _ in range(3)]
    x = 0xE220A8397B1DCDAF
    expected = []
    for _ in range(3):
        x ^= x >> 12
        x ^= (x << 25) & (2**64 - 1)
        x ^= x >> 27
        expected.append((x * 0x2545F4914F6CDD1D) % 2**64)
    assert first == expected


def test_prng_ranges():
    rng = XorShift64Star(5)
    draws = [rng.randint(3, 7) for _ in range(2000)]
    assert set(draws) == {3, 4, 5, 6, 7}
    assert all(0.0 <= rng.random() < 1.0 for _ in range(1000))


@pytest.mark.parametrize("rel", list(AllenRelation))
def test_every_relation_realizable(rel):
    p = TemporalPattern((0, 1), (rel,))
    rng = XorShift64Star(int(rel.rank))
    for _ in range(20):
        a, b = realize(p, {0: (2, 9), 1: (2, 9)}, rng)
        assert allen_relation(a, b) is rel


def test_three_pattern_realization():
    p = TemporalPattern((0, 1, 2), (R.CONTAINS, R.OVERLAPS, R.BEFORE))
    rng = XorShift64Star(1)
    for _ in range(50):
        acts = realize(p, {i: (1, 10) for i in range(3)}, rng)
        for i, j in itertools.combinations(range(3), 2):
            assert allen_relation(acts[i], acts[j]) is p.relation(i, j)


def test_unrealizable():
    inconsistent = TemporalPattern((0, 1, 2), (R.BEFORE, R.AFTER, R.BEFORE))
    t = ClassTemplate(0, (inconsistent,), {0: (1, 3), 1: (1, 3), 2: (1, 3)})
    with pytest.raises(UnrealizableTemplate):
        generate([t], 1, seed=0)
    # A contains B needs A strictly longer than B
    cramped = TemporalPattern((0, 1), (R.CONTAINS,))
    t = ClassTemplate(0, (cramped,), {0: (2, 3), 1: (3, 5)})
    with pytest.raises(UnrealizableTemplate):
        generate([t], 1, seed=0)


def test_template_validation():
    with pytest.raises(ValidationError):
        ClassTemplate(0, (TemporalPattern((0,)),), {0: (1, 2)}, noise_rate=1.0)
    with pytest.raises(ValidationError):
        ClassTemplate(0, (TemporalPattern((5,)),), {0: (1, 2)})


def test_noise_free_samples_contain_planted_patterns():
    templates = separable_templates(3)
    acts = generate(templates, 15, seed=11)
    for a in acts:
        (planted,) = templates[a.label].planted_patterns
        assert find_instances(planted, a)


def test_noisy_samples_keep_planted_patterns():
    templates = benchmark_templates(0.3)
    for a in generate(templates, 10, seed=12):
        for p in templates[a.label].planted_patterns:
            assert find_instances(canonical_form(p), a)


def test_seed_determinism():
    t = benchmark_templates()
    assert generate(t, 5, seed=3) == generate(t, 5, seed=3)
    assert generate(t, 5, seed=3) != generate(t, 5, seed=4)


def test_canonical_form_reorders():
    p = TemporalPattern((1, 0), (R.AFTER,))
    assert canonical_form(p) == TemporalPattern((0, 1), (R.BEFORE,))


def test_miner_recovers_planted_patterns():
    templates = separable_templates(3)
    acts = generate(templates, 10, seed=13)
    cfg = MiningConfig(minsup=0.05)
    fs = mine(acts, cfg)
    for t in templates:
        for p in t.planted_patterns:
            sup = max(pattern_support(p, a, fs.window) for a in acts if a.label == t.class_index)
            assert sup >= cfg.minsup
            assert p in fs.index
