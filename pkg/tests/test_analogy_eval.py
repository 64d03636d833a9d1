import csv
import io
from fractions import Fraction

import numpy as np
import pytest

from embcompare import (
    agreement_report,
    answer_question,
    evaluate,
    krippendorff_alpha,
    parse_analogy_file,
    row_normalize,
)
from embcompare.analogy_eval import (
    AnalogyParseError,
    AnalogyQuestion,
    read_answers_csv,
    write_answers_csv,
)
from helpers import exclusion_fixture, grid_fixture, make_embedding
from oracles import alpha_coincidence_matrix, cosine_ranking


def test_parse_semantic_category():
    qs = parse_analogy_file(
        io.StringIO(": capital-common-countries\nathens greece baghdad iraq\n")
    )
    assert len(qs) == 1
    assert qs[0].a == "athens" and qs[0].d == "iraq"
    assert qs[0].category == "capital-common-countries"
    assert qs[0].section == "semantic"


def test_parse_syntactic_category():
    qs = parse_analogy_file(
        io.StringIO(": gram1-adjective-to-adverb\namazing amazingly apparent apparently\n")
    )
    assert qs[0].section == "syntactic"


def test_parse_three_token_line_errors():
    with pytest.raises(AnalogyParseError, match="line 2"):
        parse_analogy_file(io.StringIO(": cat\na b c\n"))


def test_parse_five_token_line_errors():
    with pytest.raises(AnalogyParseError, match="line 2"):
        parse_analogy_file(io.StringIO(": cat\na b c d e\n"))


def test_parse_question_before_category_errors():
    with pytest.raises(AnalogyParseError, match="before any"):
        parse_analogy_file(io.StringIO("a b c d\n"))


def test_parse_malformed_header_errors():
    with pytest.raises(AnalogyParseError, match="line 1"):
        parse_analogy_file(io.StringIO(": two words\na b c d\n"))


def test_parse_lowercase_option():
    qs = parse_analogy_file(io.StringIO(": cat\nLondon England Madrid Spain\n"))
    assert qs[0].a == "London"
    lowered = parse_analogy_file(
        io.StringIO(": cat\nLondon England Madrid Spain\n"), lowercase=True
    )
    assert lowered[0].a == "london" and lowered[0].d == "spain"


def test_exact_analogy_answered_correctly():
    emb, questions = grid_fixture()
    unit, _ = row_normalize(emb)
    record = answer_question(unit, questions[0])
    assert record.predicted == "bb"
    assert record.correct is True


def test_oov_question_is_skipped():
    emb, _ = grid_fixture()
    unit, _ = row_normalize(emb)
    q = AnalogyQuestion(a="missing", b="ba", c="ab", d="bb", category="x")
    record = answer_question(unit, q)
    assert record.predicted is None
    assert record.correct is None
    assert record.status == "SKIPPED"


def test_exclusion_rule_returns_second_nearest():
    emb, question, expected = exclusion_fixture()
    unit, _ = row_normalize(emb)
    # brute-force cosine ranking: the raw nearest is c itself
    target = (
        emb.values[emb.index[question.b]]
        - emb.values[emb.index[question.a]]
        + emb.values[emb.index[question.c]]
    )
    ranking = [emb.vocab[i] for i in cosine_ranking(emb.values, target)]
    assert ranking[0] == question.c
    assert ranking[1] == expected

    record = answer_question(unit, question)
    assert record.predicted == expected


def test_predicted_never_among_query_words():
    rng = np.random.default_rng(0)
    emb = make_embedding(rng.standard_normal((30, 6)))
    unit, _ = row_normalize(emb)
    vocab = emb.vocab
    for i in range(20):
        words = rng.choice(30, size=4, replace=False)
        q = AnalogyQuestion(
            a=vocab[words[0]],
            b=vocab[words[1]],
            c=vocab[words[2]],
            d=vocab[words[3]],
            category="rand",
        )
        record = answer_question(unit, q)
        assert record.predicted not in {q.a, q.b, q.c}


def test_no_candidates_left_is_skipped():
    # all three vocabulary words are query words: nothing can be predicted
    emb = make_embedding(np.eye(3), vocab=("p", "q", "r"))
    unit, _ = row_normalize(emb)
    q = AnalogyQuestion(a="p", b="q", c="r", d="p", category="tiny")
    record = answer_question(unit, q)
    assert record.predicted is None
    assert record.status == "SKIPPED"


def test_answer_invariant_under_uniform_scaling():
    emb, questions = grid_fixture()
    scaled = make_embedding(emb.values * 17.0, vocab=emb.vocab)
    for q in questions:
        u1, _ = row_normalize(emb)
        u2, _ = row_normalize(scaled)
        assert answer_question(u1, q).predicted == answer_question(u2, q).predicted


def test_gold_answer_oov_is_not_applicable():
    emb, _ = grid_fixture()
    unit, _ = row_normalize(emb)
    q = AnalogyQuestion(a="aa", b="ba", c="ab", d="unseen", category="x")
    record = answer_question(unit, q)
    assert record.predicted == "bb"
    assert record.correct is None


def test_evaluate_perfect_grid():
    emb, questions = grid_fixture()
    report = evaluate(emb, questions)
    assert report.total.accuracy == 1.0
    assert report.total.answered == 4
    assert report.total.skipped == 0
    assert set(report.per_section) == {"semantic", "syntactic"}
    assert report.per_section["syntactic"].total == 1


def test_evaluate_mixed_counts():
    emb, questions = grid_fixture()
    wrong = AnalogyQuestion(a="aa", b="ba", c="ab", d="far1", category="grid-shift")
    skipped = AnalogyQuestion(a="nope", b="ba", c="ab", d="bb", category="grid-shift")
    qs = questions[:3] + [wrong, skipped]
    report = evaluate(emb, qs)
    total = report.total
    assert total.total == 5
    assert total.answered == 4
    assert total.skipped == 1
    assert total.correct == 3
    assert total.accuracy == pytest.approx(0.75)
    assert total.accuracy_oov_wrong == pytest.approx(0.6)
    assert total.answered + total.skipped == total.total


def test_evaluate_workers_do_not_change_results():
    emb, questions = grid_fixture()
    qs = questions * 40
    single = evaluate(emb, qs, workers=1)
    pooled = evaluate(emb, qs, workers=4)
    assert [r.predicted for r in single.answers] == [r.predicted for r in pooled.answers]


def test_alpha_identical_sequences():
    result = krippendorff_alpha(["X", "Y"], ["X", "Y"])
    assert result.alpha == 1.0
    assert result.n_agreements == 2
    assert not result.degenerate


def test_alpha_hand_computed_fixture():
    # coincidence-matrix arithmetic gives exactly 8/15 for this pair
    result = krippendorff_alpha(["X", "X", "Y", "Y"], ["X", "Y", "Y", "Y"])
    assert result.alpha == pytest.approx(float(Fraction(8, 15)), abs=1e-12)
    assert result.n_items == 4
    assert result.n_agreements == 3
    assert result.coincidence[("X", "Y")] == 1
    assert result.coincidence[("Y", "X")] == 1
    assert result.coincidence[("X", "X")] == 2


def test_alpha_total_disagreement():
    result = krippendorff_alpha(["X", "Y"], ["Y", "X"])
    assert result.alpha == pytest.approx(-0.5, abs=1e-12)


def test_alpha_chance_level_is_zero():
    result = krippendorff_alpha(["X", "X", "X", "Y"], ["X", "X", "X", "X"])
    assert result.alpha == pytest.approx(0.0, abs=1e-12)


def test_alpha_three_labels():
    result = krippendorff_alpha(["X", "Y", "Z", "X"], ["X", "Z", "Z", "X"])
    assert result.alpha == pytest.approx(float(Fraction(12, 19)), abs=1e-12)


def test_alpha_all_labels_identical_is_degenerate_one():
    result = krippendorff_alpha(["X", "X"], ["X", "X"])
    assert result.alpha == 1.0
    assert result.degenerate


def test_alpha_skipped_items_excluded():
    result = krippendorff_alpha(["X", None, "Y"], ["X", "X", "Y"])
    assert result.alpha == 1.0
    assert result.n_items == 2
    assert result.n_excluded == 1


def test_alpha_is_symmetric():
    a = ["X", "Y", "X", "Z", None]
    b = ["X", "Y", "Y", "Z", "X"]
    assert krippendorff_alpha(a, b).alpha == krippendorff_alpha(b, a).alpha


def test_alpha_flipping_an_agreement_lowers_alpha():
    a = ["X", "Y", "X", "Y"]
    b = ["X", "Y", "X", "Y"]
    before = krippendorff_alpha(a, b).alpha
    b_flipped = ["X", "Y", "X", "X"]
    after = krippendorff_alpha(a, b_flipped).alpha
    assert after < before


@pytest.mark.parametrize("seed", range(12))
def test_alpha_matches_coincidence_oracle(seed):
    rng = np.random.default_rng(seed)
    labels = ["A", "B", "C", "D"]
    n = int(rng.integers(2, 30))
    a = [labels[i] for i in rng.integers(0, len(labels), size=n)]
    b = [
        a[i] if rng.random() < 0.6 else labels[int(rng.integers(0, len(labels)))]
        for i in range(n)
    ]
    expected = alpha_coincidence_matrix(a, b)
    assert krippendorff_alpha(a, b).alpha == pytest.approx(float(expected), abs=1e-12)


def test_alpha_errors():
    with pytest.raises(ValueError, match="length"):
        krippendorff_alpha(["X"], ["X", "Y"])
    with pytest.raises(ValueError, match="answered by both"):
        krippendorff_alpha([None, "X"], ["X", None])


def test_agreement_report_identical_embeddings():
    emb, questions = grid_fixture()
    report = agreement_report(emb, emb, questions)
    assert report.agreement.alpha == 1.0
    assert report.disagreements == ()


def test_agreement_report_lists_disagreements():
    # two embeddings that differ only in which word sits at each analogy
    # target, so both questions get answered but with different words
    vocab = ("qa", "qb", "qc", "win1", "win2")
    t1 = np.array([-0.1, 0.1, 1.0])  # vec(qb) - vec(qa) + vec(qc)
    t2 = np.array([0.1, -0.1, 1.0])  # vec(qa) - vec(qb) + vec(qc)
    rows = np.array([[1.0, 0.0, 0.0], [0.9, 0.1, 0.0], [0.0, 0.0, 1.0], t1, t2])
    swapped = rows.copy()
    swapped[[3, 4]] = swapped[[4, 3]]
    e1 = make_embedding(rows, vocab, name="first")
    e2 = make_embedding(swapped, vocab, name="second")
    questions = [
        AnalogyQuestion(a="qa", b="qb", c="qc", d="win1", category="capital"),
        AnalogyQuestion(a="qb", b="qa", c="qc", d="win2", category="capital"),
    ]
    report = agreement_report(e1, e2, questions, scores={"zeta_cca": 0.5})
    assert [r.predicted for r in report.left.answers] == ["win1", "win2"]
    assert [r.predicted for r in report.right.answers] == ["win2", "win1"]
    assert len(report.disagreements) == 2
    doc = report.to_json_dict()
    assert doc["scores"] == {"zeta_cca": 0.5}
    assert doc["alpha"] == report.agreement.alpha


def test_answers_csv_round_trip(tmp_path):
    emb, questions = grid_fixture()
    qs = questions + [
        AnalogyQuestion(a="missing", b="ba", c="ab", d="bb", category="grid-shift")
    ]
    report = evaluate(emb, qs)
    path = tmp_path / "answers.csv"
    write_answers_csv(qs, report.answers, path)
    rows = read_answers_csv(path)
    assert len(rows) == 5
    assert rows[0]["predicted"] == "bb"
    assert rows[0]["status"] == "ANSWERED"
    assert rows[4]["status"] == "SKIPPED"
    assert rows[4]["predicted"] == ""


def test_answers_csv_schema_validation(tmp_path):
    path = tmp_path / "bad.csv"
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows([["a", "b"], ["1", "2"]])
    with pytest.raises(ValueError, match="columns"):
        read_answers_csv(path)


def test_question_validation():
    with pytest.raises(ValueError, match="non-empty"):
        AnalogyQuestion(a="", b="b", c="c", d="d", category="x")
    with pytest.raises(ValueError, match="category"):
        AnalogyQuestion(a="a", b="b", c="c", d="d", category="")
