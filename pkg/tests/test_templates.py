import pytest

from ergmkit.templates import (
    TemplateFamily,
    TemplateGraph,
    default_family,
    make_template,
)


def test_builtin_templates():
    e = make_template("edge")
    assert (e.k, e.edge_count) == (2, 1)
    t = make_template("triangle")
    assert (t.k, t.edge_count) == (3, 3) and t.degrees == (2, 2, 2)
    s = make_template("two_star")
    assert s.k == 3 and s.edge_count == 2 and sorted(s.degrees) == [1, 1, 2]
    k4 = make_template("k_star:4")
    assert k4.k == 5 and k4.edge_count == 4
    c5 = make_template("cycle:5")
    assert c5.k == 5 and c5.edge_count == 5 and all(d == 2 for d in c5.degrees)
    with pytest.raises(ValueError):
        make_template("heptagram")


def test_explicit_template_and_validation():
    t = make_template({"k": 4, "edges": [[0, 1], [1, 2], [2, 3]]})
    assert t.edge_count == 3
    with pytest.raises(ValueError):
        make_template({"k": 3, "edges": [[0, 0]]})
    with pytest.raises(ValueError):
        make_template({"k": 3, "edges": [[0, 1], [0, 1]]})
    with pytest.raises(ValueError):
        make_template({"k": 3, "edges": [[0, 5]]})
    with pytest.raises(ValueError):
        make_template({"k": 3, "edges": [[0, 1]], "extra": 1})


def test_degree_sum_and_dij():
    t = make_template("triangle")
    assert sum(t.degrees) == 2 * t.edge_count
    assert all(t.d_ij[e] == 1 for e in t.edges)
    s = make_template("two_star")
    assert all(s.d_ij[e] == 0 for e in s.edges)
    d = make_template({"k": 4, "edges": [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3]]})
    assert d.d_ij[(0, 1)] == 2  # diamond: the hub pair sees both others
    # d_ij against brute force on random templates
    import itertools
    from ergmkit.rng import make_rng

    rng = make_rng(11, 0)
    for _ in range(50):
        k = int(rng.integers(3, 7))
        pairs = list(itertools.combinations(range(k), 2))
        mask = rng.random(len(pairs)) < 0.5
        edges = [pairs[i] for i in range(len(pairs)) if mask[i]]
        if not edges:
            continue
        t = make_template({"k": k, "edges": edges})
        adj = [set() for _ in range(k)]
        for i, j in t.edges:
            adj[i].add(j)
            adj[j].add(i)
        for (i, j) in t.edges:
            want = len([l for l in range(k) if l not in (i, j)
                        and l in adj[i] and l in adj[j]])
            assert t.d_ij[(i, j)] == want


def test_family_rules():
    fam = TemplateFamily(["triangle", "two_star"], cap=4)
    assert len(fam) == 2
    with pytest.raises(ValueError):
        TemplateFamily(["triangle", "triangle"])
    with pytest.raises(ValueError):
        TemplateFamily(["cycle:5"], cap=4)
    with pytest.raises(ValueError):
        TemplateFamily([])


def test_default_family_content():
    fam = default_family(4)
    # connected graphs with >= 2 edges up to iso: P3, K3 on three vertices;
    # path, star, cycle, paw, diamond, K4 on four
    assert len(fam) == 8
    assert all(t.is_connected() and t.edge_count >= 2 for t in fam)
    canons = {t.canonical_form() for t in fam}
    assert len(canons) == 8
    sizes = sorted((t.k, t.edge_count) for t in fam)
    assert sizes == [(3, 2), (3, 3), (4, 3), (4, 3), (4, 4), (4, 4), (4, 5), (4, 6)]
    fam3 = default_family(3)
    assert len(fam3) == 2
    with pytest.raises(ValueError):
        default_family(2)


def test_canonical_form_iso_invariance():
    a = make_template({"k": 4, "edges": [[0, 1], [1, 2], [2, 3]]})
    b = make_template({"k": 4, "edges": [[2, 0], [0, 3], [3, 1]]})  # relabeled path
    assert a.canonical_form() == b.canonical_form()
    c = make_template("k_star:3")
    assert a.canonical_form() != c.canonical_form()


def test_template_hashable_for_model_caching():
    t = make_template("triangle")
    assert hash(t) == hash(TemplateGraph(3, ((0, 1), (0, 2), (1, 2)), name="triangle"))
