"""Pruning tests: worked examples plus prefix, composition and monotonicity properties."""

from hypothesis import given, settings
from hypothesis import strategies as st

from psq.alignment import TranslationTable
from psq.pruning import PruningConfig, combine_configs, kept_length, prune, prune_stats

THREE = TranslationTable.from_mapping({"a": {"x": 0.7, "y": 0.2, "z": 0.1}})


@st.composite
def tables(draw):
    """Random tables with up to five sources and eight translations each."""

    mapping = {}
    for source in range(draw(st.integers(1, 5))):
        weights = draw(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=8))
        mass = draw(st.floats(0.5, 1.0))
        total = sum(weights)
        mapping[f"s{source}"] = {f"t{i}": w / total * mass for i, w in enumerate(weights)}
    return TranslationTable.from_mapping(mapping)


configs = st.builds(
    PruningConfig,
    pmf_min=st.one_of(st.sampled_from([0.0, 0.05, 0.01, 0.001]), st.floats(0.0, 1.0)),
    cdf_max=st.floats(0.01, 1.0),
    top_k=st.one_of(st.none(), st.integers(1, 10)),
)


def entry_count(table: TranslationTable) -> int:
    return table.num_entries


def test_identity_config_is_noop():
    """The default config keeps every entry untouched."""

    assert prune(THREE, PruningConfig()) == THREE
    assert PruningConfig().is_identity


def test_cdf_keeps_shortest_prefix_reaching_mass():
    """0.7 falls short of 0.8 and 0.9 reaches it, so two entries stay."""

    pruned = prune(THREE, PruningConfig(cdf_max=0.8))
    assert pruned.translations("a") == (("x", 0.7), ("y", 0.2))


def test_cdf_cutoff_needs_the_full_mass():
    """A first entry just below the cutoff does not reach it on its own."""

    cfg = PruningConfig(cdf_max=0.8)
    assert kept_length([0.8 - 5e-13, 0.1, 0.05], cfg) == 2
    assert kept_length([0.8, 0.1, 0.05], cfg) == 1
    assert kept_length([0.3, 0.2], cfg) == 2


def test_combined_criteria_with_renormalization():
    """The shortest prefix wins and the survivor is rescaled to one."""

    cfg = PruningConfig(pmf_min=0.15, top_k=1, renormalize=True)
    assert kept_length([0.7, 0.2, 0.1], cfg) == 1
    assert prune(THREE, cfg).translations("a") == (("x", 1.0),)


def test_sources_left_empty_are_removed():
    """A PMF floor above every probability removes the source."""

    assert "a" not in prune(THREE, PruningConfig(pmf_min=0.8))


def test_invalid_configs_rejected():
    """Values outside the knob domains fail validation."""

    for kwargs in ({"cdf_max": 0.0}, {"pmf_min": 1.5}, {"top_k": 0}, {"top_k": 2.5}):
        try:
            PruningConfig(**kwargs)
        except ValueError:
            pass
        else:  # pragma: no cover - defensive
            raise AssertionError(f"{kwargs} should be rejected")


def test_top_k_accepts_infinity_spellings():
    """Unbounded top-k can be written as inf."""

    assert PruningConfig(top_k="inf").top_k is None
    assert PruningConfig(top_k=float("inf")).top_k is None
    assert PruningConfig(top_k="8").top_k == 8
    assert PruningConfig(top_k=None).label == "pmf=0,cdf=1,topk=inf"


def test_prune_stats_examples():
    """Retained mass is measured against the original probabilities."""

    identity = prune_stats(THREE, prune(THREE, PruningConfig()))
    assert abs(identity.retained_mass - 1.0) < 1e-12

    halves = TranslationTable.from_mapping({"a": {"x": 0.5, "y": 0.5}})
    report = prune_stats(halves, prune(halves, PruningConfig(top_k=1)))
    assert report.entries_before == 2
    assert report.entries_after == 1
    assert abs(report.retained_mass - 0.5) < 1e-12

    report = prune_stats(THREE, prune(THREE, PruningConfig(cdf_max=0.8)))
    assert abs(report.retained_mass - 0.9) < 1e-12


def test_renormalized_stats_use_original_mass():
    """Renormalizing does not inflate the retained mass."""

    cfg = PruningConfig(top_k=1, renormalize=True)
    report = prune_stats(THREE, prune(THREE, cfg))
    assert abs(report.retained_mass - 0.7) < 1e-12


@settings(max_examples=1000, deadline=None)
@given(tables(), configs)
def test_pruned_lists_are_prefixes(table, cfg):
    """Without renormalization every pruned list is a prefix of the original."""

    pruned = prune(table, cfg)
    for source, kept in pruned.entries.items():
        original = table.translations(source)
        assert kept == original[: len(kept)]
        assert len(kept) >= 1
    assert prune(table, PruningConfig()) == table


@settings(max_examples=1000, deadline=None)
@given(tables(), configs, configs)
def test_pruning_twice_equals_combined_config(table, first, second):
    """Sequential pruning equals one pass with the min-combined config."""

    assert prune(prune(table, first), second) == prune(table, combine_configs(first, second))


@settings(max_examples=1000, deadline=None)
@given(tables(), configs, st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.integers(0, 5))
def test_tightening_never_adds_entries(table, cfg, pmf_step, cdf_scale, topk_step):
    """Raising the PMF floor, lowering the CDF cutoff or the top-k cap only shrinks lists."""

    base = prune(table, cfg)
    tighter_pmf = cfg.model_copy(update={"pmf_min": min(1.0, cfg.pmf_min + pmf_step)})
    tighter_cdf = cfg.model_copy(update={"cdf_max": max(0.01, cfg.cdf_max * cdf_scale)})
    top_k = cfg.top_k if cfg.top_k is not None else 10
    tighter_topk = cfg.model_copy(update={"top_k": max(1, top_k - topk_step)})
    for tighter in (tighter_pmf, tighter_cdf, tighter_topk):
        pruned = prune(table, tighter)
        assert entry_count(pruned) <= entry_count(base)
        for source in table.entries:
            assert len(pruned.entries.get(source, ())) <= len(base.entries.get(source, ()))


@settings(max_examples=1000, deadline=None)
@given(tables(), configs)
def test_renormalized_lists_sum_to_one(table, cfg):
    """Every renormalized list sums to one and keeps the unrenormalized targets."""

    plain = prune(table, cfg)
    rescaled = prune(table, cfg.model_copy(update={"renormalize": True}))
    assert list(rescaled.entries) == list(plain.entries)
    for source, kept in rescaled.entries.items():
        assert abs(sum(prob for _, prob in kept) - 1.0) < 1e-9
        assert [target for target, _ in kept] == [target for target, _ in plain.entries[source]]
