"""Fold planning, recall/accuracy metrics, ablation, combined F1,
prediction dumps, and the naive re-scorers."""

import math
import random
from datetime import date

import pytest

from emnlink.config import Config
from emnlink.corpus import GoldLabel, Tweet, load_tweets
from emnlink.errors import EmptySetError, FormatError, InsufficientDataError
from emnlink.evaluation import (
    CombinedRecord,
    ExplicitLinkerStub,
    PredictionRecord,
    ablate_context,
    combined_f1,
    cross_validate,
    dump_combined,
    dump_predictions,
    load_predictions,
    mix_evaluation_set,
    plan_folds,
    recall_at_k,
    recall_from_dump,
    score_combined,
    score_predictions,
    training_queries,
)
from emnlink.linker import train
from emnlink.pipeline import CorpusBundle

from conftest import (
    AS_OF,
    build_separable,
    factual_only_bundle,
    private_clues,
    SEP_IDS,
)


class TestPlanFolds:
    def test_partitions_all_ids(self):
        ids = [f"t{i}" for i in range(17)]
        plan = plan_folds(ids, folds=5, seed=3)
        seen = [tid for fold in range(5) for tid in plan.test_ids(fold)]
        assert sorted(seen) == sorted(ids)

    def test_fold_sizes_differ_at_most_one(self):
        ids = [f"t{i}" for i in range(23)]
        plan = plan_folds(ids, folds=5, seed=0)
        sizes = [len(plan.test_ids(fold)) for fold in range(5)]
        assert max(sizes) - min(sizes) <= 1

    def test_train_ids_complement_test_ids(self):
        ids = [f"t{i}" for i in range(10)]
        plan = plan_folds(ids, folds=3, seed=1)
        for fold in range(3):
            assert sorted(plan.train_ids(fold) + plan.test_ids(fold)) == sorted(ids)

    def test_same_seed_same_plan(self):
        ids = [f"t{i}" for i in range(12)]
        assert plan_folds(ids, seed=9) == plan_folds(ids, seed=9)

    def test_seed_changes_plan(self):
        ids = [f"t{i}" for i in range(40)]
        plans = {
            tuple(sorted(plan_folds(ids, seed=s).assignments.items()))
            for s in range(5)
        }
        assert len(plans) > 1

    def test_input_order_irrelevant(self):
        ids = [f"t{i}" for i in range(9)]
        assert plan_folds(ids, seed=2) == plan_folds(ids[::-1], seed=2)

    def test_too_few_folds(self):
        with pytest.raises(ValueError):
            plan_folds(["a", "b"], folds=1)

    def test_too_few_tweets(self):
        with pytest.raises(EmptySetError):
            plan_folds(["a", "b"], folds=3)


class TestRecallAtK:
    def test_separable_is_perfect(self, separable):
        graph, tweets = separable
        recall, records = recall_at_k(graph, tweets, k=25)
        assert recall == 100.0
        assert all(r.gold_rank == 1 and r.predicted == r.gold for r in records)

    def test_no_candidates_counts_as_miss(self, separable):
        graph, tweets = separable
        oov = Tweet(id="oov", text="quiche brunch", gold_entity="m1")
        recall, records = recall_at_k(graph, list(tweets) + [oov], k=25)
        assert recall == 100.0 * len(tweets) / (len(tweets) + 1)
        miss = next(r for r in records if r.tweet_id == "oov")
        assert miss.predicted == "" and miss.gold_rank is None

    def test_gold_outside_candidates_is_miss(self, separable):
        graph, _ = separable
        # Text carries only m2 clues but gold says m1.
        tweet = Tweet(id="x", text=" ".join(private_clues(1)), gold_entity="m1")
        recall, records = recall_at_k(graph, [tweet], k=25)
        assert recall == 0.0
        assert records[0].predicted == "m2"
        assert records[0].gold_rank is None

    def test_monotone_in_k(self, separable):
        graph, _ = separable
        # Own entity at rank 2: three next-entity clues, one own clue.
        tweets = [
            Tweet(
                id=f"r{i}",
                text=" ".join(private_clues((i + 1) % 5) + [private_clues(i)[0]]),
                gold_entity=SEP_IDS[i],
            )
            for i in range(5)
        ]
        values = [recall_at_k(graph, tweets, k=k)[0] for k in (1, 2, 5)]
        assert values[0] == 0.0
        assert values[1] == 100.0
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_requires_gold(self, separable):
        graph, _ = separable
        with pytest.raises(ValueError):
            recall_at_k(graph, [Tweet(id="t", text="zetaa")], k=25)

    def test_empty_set(self, separable):
        graph, _ = separable
        with pytest.raises(EmptySetError):
            recall_at_k(graph, [], k=25)


class TestCrossValidate:
    def test_separable_all_folds_perfect(self, separable):
        graph, tweets = separable
        report = cross_validate(graph, tweets, folds=5, seed=0)
        assert report.disambiguation_accuracy == 100.0
        assert report.per_fold == (100.0,) * 5
        assert report.recall_at_k is None

    def test_predictions_cover_every_tweet_once(self, separable):
        graph, tweets = separable
        report = cross_validate(graph, tweets, folds=5, seed=0)
        assert sorted(r.tweet_id for r in report.predictions) == sorted(
            t.id for t in tweets
        )
        assert {r.fold for r in report.predictions} == set(range(5))

    def test_pooled_accuracy_matches_records(self, separable):
        graph, tweets = separable
        report = cross_validate(graph, tweets, folds=5, seed=0)
        correct = sum(1 for r in report.predictions if r.correct)
        assert report.disambiguation_accuracy == 100.0 * correct / len(
            report.predictions
        )

    def test_threads_do_not_change_the_report(self, separable):
        graph, tweets = separable
        serial = cross_validate(graph, tweets, folds=5, seed=0, threads=1)
        threaded = cross_validate(graph, tweets, folds=5, seed=0, threads=3)
        assert serial == threaded

    def test_single_candidate_queries_raise_with_fold_index(self, separable):
        graph, _ = separable
        # One private clue each: a single candidate, so no preference pairs.
        tweets = [
            Tweet(id=f"s{i}", text=private_clues(i)[0], gold_entity=SEP_IDS[i])
            for i in range(5)
        ]
        with pytest.raises(InsufficientDataError, match="fold 0"):
            cross_validate(graph, tweets, folds=5, seed=0)

    def test_requires_gold_everywhere(self, separable):
        graph, tweets = separable
        mixed = list(tweets) + [Tweet(id="nogold", text="zetaa yoraa")]
        with pytest.raises(ValueError):
            cross_validate(graph, mixed)

    def test_empty_set(self, separable):
        graph, _ = separable
        with pytest.raises(EmptySetError):
            cross_validate(graph, [])


class TestTrainingQueries:
    def test_drops_tweets_without_candidates(self, separable):
        graph, tweets = separable
        oov = Tweet(id="oov", text="quiche brunch", gold_entity="m1")
        queries = training_queries(graph, list(tweets) + [oov])
        assert sorted(q.tweet_id for q in queries) == sorted(t.id for t in tweets)

    def test_queries_feed_train(self, separable):
        graph, tweets = separable
        ranker = train(training_queries(graph, tweets))
        assert ranker.swapped_pairs == 0


class TestAblateContext:
    def test_contextual_knowledge_helps_on_demo_corpus(self, demo_corpus, demo_config_kwargs):
        bundle = CorpusBundle.from_files(
            tweets=demo_corpus["tweets"],
            triples=demo_corpus["triples"],
            labels=demo_corpus["labels"],
            pageviews=demo_corpus["pageviews"],
            phrases=demo_corpus["phrases"],
            stopwords=demo_corpus["stopwords"],
        )
        config = Config(**demo_config_kwargs)
        gold = load_tweets(demo_corpus["gold"])
        with_ctx, without_ctx = ablate_context(bundle, config, gold=gold)
        assert with_ctx.recall_at_k == 100.0
        assert without_ctx.recall_at_k == pytest.approx(100.0 * 10 / 15)
        assert without_ctx.recall_at_k < with_ctx.recall_at_k
        assert without_ctx.disambiguation_accuracy < with_ctx.disambiguation_accuracy

    def test_factual_only_bundle_reports_identical(self):
        bundle, gold = factual_only_bundle()
        config = Config(
            entity_type="movie", type_keywords=(), as_of_date=date(2014, 6, 1), folds=2
        )
        with_ctx, without_ctx = ablate_context(bundle, config, gold=gold, folds=2)
        assert with_ctx == without_ctx

    def test_defaults_to_bundle_gold(self):
        bundle, gold = factual_only_bundle()
        merged = CorpusBundle(
            tweets=bundle.tweets + tuple(gold),
            triples=bundle.triples,
            records=bundle.records,
            views=bundle.views,
            phrases=bundle.phrases,
            stopwords=bundle.stopwords,
        )
        config = Config(
            entity_type="movie", type_keywords=(), as_of_date=date(2014, 6, 1), folds=2
        )
        with_ctx, _ = ablate_context(merged, config, folds=2)
        assert len(
            [r for r in with_ctx.predictions if r.fold is None]
        ) == len(gold)

    def test_requires_gold_tweets(self):
        bundle, _ = factual_only_bundle()
        config = Config(
            entity_type="movie", type_keywords=(), as_of_date=date(2014, 6, 1), folds=2
        )
        with pytest.raises(EmptySetError):
            ablate_context(bundle, config, gold=[], folds=2)


def separable_combined_parts():
    """Graph, training queries, and a mixed pool over the separable fixture."""
    graph, tweets = build_separable(tweets_per_entity=3)
    implicit = [
        Tweet(
            id=t.id, text=t.text, gold_entity=t.gold_entity, gold_label=GoldLabel.IMPLICIT
        )
        for t in tweets
    ]
    explicit = [
        Tweet(
            id=f"x_{entity_id}",
            text=" ".join(private_clues(i)),
            gold_entity=entity_id,
            gold_label=GoldLabel.EXPLICIT,
        )
        for i, entity_id in enumerate(SEP_IDS)
    ]
    nil = [
        Tweet(id=f"n{i}", text=text, gold_label=GoldLabel.NIL)
        for i, text in enumerate(
            ["quiche brunch", "thunderstorm picnic", "sourdough rising"]
        )
    ]
    return graph, implicit, explicit, nil


class TestCombinedF1:
    def test_perfect_stub_and_linker_reach_one(self):
        graph, implicit, explicit, nil = separable_combined_parts()
        train_impl, mixed = mix_evaluation_set(implicit, explicit, nil, seed=0)
        ranker = train(training_queries(graph, train_impl))
        stub = ExplicitLinkerStub(
            behavior={t.id: t.gold_entity for t in explicit}
        )
        report = combined_f1(stub, mixed, graph, ranker)
        assert report.combined.f1 == 1.0
        assert report.el_only.precision == 1.0
        assert report.el_only.recall < 1.0

    def test_empty_stub_floor(self):
        graph, implicit, _, nil = separable_combined_parts()
        train_impl, mixed = mix_evaluation_set(implicit, [], nil, seed=0)
        ranker = train(training_queries(graph, train_impl))
        stub = ExplicitLinkerStub(behavior={})
        report = combined_f1(stub, mixed, graph, ranker)
        assert report.el_only.f1 == 0.0
        implicit_rows = [r for r in report.records if r.gold_label == "implicit"]
        accuracy = sum(
            1 for r in implicit_rows if r.combined_predicted == r.gold
        ) / len(implicit_rows)
        assert report.combined.recall == accuracy

    def test_nil_annotation_costs_precision_not_recall(self):
        graph, implicit, explicit, nil = separable_combined_parts()
        _, mixed = mix_evaluation_set(implicit, explicit, nil, seed=0)
        honest = ExplicitLinkerStub({t.id: t.gold_entity for t in explicit})
        nil_id = next(t.id for t in mixed if t.gold_label == "nil")
        noisy = ExplicitLinkerStub(
            dict(honest.behavior) | {nil_id: "m1"}
        )
        ranker = train(training_queries(graph, implicit))
        clean_report = combined_f1(honest, mixed, graph, ranker)
        noisy_report = combined_f1(noisy, mixed, graph, ranker)
        assert noisy_report.el_only.precision < clean_report.el_only.precision
        assert noisy_report.el_only.recall == clean_report.el_only.recall

    def test_empty_mixed_set(self, separable):
        graph, tweets = separable
        ranker = train(training_queries(graph, tweets))
        with pytest.raises(EmptySetError):
            combined_f1(ExplicitLinkerStub({}), [], graph, ranker)

    def test_records_trace_every_tweet(self):
        graph, implicit, explicit, nil = separable_combined_parts()
        _, mixed = mix_evaluation_set(implicit, explicit, nil, seed=0)
        ranker = train(training_queries(graph, implicit))
        report = combined_f1(ExplicitLinkerStub({}), mixed, graph, ranker)
        assert [r.tweet_id for r in report.records] == [t.id for t in mixed]


class TestExplicitLinkerStub:
    def test_from_tsv(self, tmp_path):
        path = tmp_path / "stub.tsv"
        path.write_text("# comment\nt1\te9\n\nt2\t\nt3\te7\n")
        stub = ExplicitLinkerStub.from_tsv(path)
        assert stub.predict("t1") == "e9"
        assert stub.predict("t2") is None
        assert stub.predict("t3") == "e7"
        assert stub.predict("unknown") is None

    def test_rejects_wrong_columns(self, tmp_path):
        path = tmp_path / "stub.tsv"
        path.write_text("t1\te9\textra\n")
        with pytest.raises(FormatError) as err:
            ExplicitLinkerStub.from_tsv(path)
        assert err.value.line == 1

    def test_rejects_empty_tweet_id(self, tmp_path):
        path = tmp_path / "stub.tsv"
        path.write_text("\te9\n")
        with pytest.raises(FormatError):
            ExplicitLinkerStub.from_tsv(path)


class TestMixEvaluationSet:
    def test_counts_follow_the_recipe(self):
        _, implicit, explicit, nil = separable_combined_parts()
        assert len(implicit) == 15 and len(explicit) == 5 and len(nil) == 3
        train_impl, mixed = mix_evaluation_set(implicit, explicit, nil, seed=0)
        n_test = math.floor(0.4 * 15)
        assert len(train_impl) == 15 - n_test
        by_label = {}
        for t in mixed:
            by_label.setdefault(t.gold_label, []).append(t)
        assert len(by_label["implicit"]) == n_test
        # Explicit demand floor(6 * 4 / 1) = 24 capped by the pool of 5.
        assert len(by_label["explicit"]) == 5
        assert len(by_label["nil"]) == min(math.floor(0.25 * (5 + n_test)), 3)

    def test_ratio_shapes_explicit_share(self):
        _, implicit, explicit, nil = separable_combined_parts()
        _, mixed = mix_evaluation_set(implicit, explicit, nil, ratio=(1, 2), seed=0)
        explicit_in_mix = [t for t in mixed if t.gold_label == "explicit"]
        assert len(explicit_in_mix) == math.floor(6 * 1 / 2)

    def test_train_and_test_disjoint(self):
        _, implicit, explicit, nil = separable_combined_parts()
        train_impl, mixed = mix_evaluation_set(implicit, explicit, nil, seed=4)
        assert not {t.id for t in train_impl} & {t.id for t in mixed}

    def test_mixed_is_sorted_and_deterministic(self):
        _, implicit, explicit, nil = separable_combined_parts()
        a = mix_evaluation_set(implicit, explicit, nil, seed=6)
        b = mix_evaluation_set(implicit, explicit, nil, seed=6)
        assert a == b
        assert [t.id for t in a[1]] == sorted(t.id for t in a[1])

    def test_seed_changes_sample(self):
        _, implicit, explicit, nil = separable_combined_parts()
        picks = {
            tuple(t.id for t in mix_evaluation_set(implicit, explicit, nil, seed=s)[1])
            for s in range(6)
        }
        assert len(picks) > 1

    def test_errors(self):
        _, implicit, explicit, nil = separable_combined_parts()
        with pytest.raises(EmptySetError):
            mix_evaluation_set([], explicit, nil)
        with pytest.raises(EmptySetError):
            mix_evaluation_set(implicit[:2], explicit, nil)
        with pytest.raises(ValueError):
            mix_evaluation_set(implicit, explicit, nil, ratio=(0, 1))


class TestDumps:
    def test_prediction_round_trip(self, tmp_path):
        records = [
            PredictionRecord("t1", 0, "e1", "e1", 1),
            PredictionRecord("t2", None, "e2", "", None),
            PredictionRecord("t3", 4, "e3", "e9", 7),
        ]
        path = tmp_path / "preds.tsv"
        dump_predictions(records, path)
        assert load_predictions(path) == records

    def test_load_rejects_bad_magic(self, tmp_path):
        path = tmp_path / "preds.tsv"
        path.write_text("#wrong\tv1\nheader\n")
        with pytest.raises(FormatError):
            load_predictions(path)

    def test_load_rejects_bad_columns(self, tmp_path):
        path = tmp_path / "preds.tsv"
        path.write_text("#emn-predictions\tv1\nh\nt1\t0\te1\n")
        with pytest.raises(FormatError) as err:
            load_predictions(path)
        assert err.value.line == 3

    def test_naive_accuracy_matches_report(self, tmp_path, separable):
        graph, tweets = separable
        report = cross_validate(graph, tweets, folds=5, seed=0)
        path = tmp_path / "cv.tsv"
        dump_predictions(report.predictions, path)
        scored = score_predictions(path)
        assert abs(scored["accuracy"] - report.disambiguation_accuracy) <= 1e-9
        for fold, value in scored["per_fold"].items():
            assert abs(value - report.per_fold[fold]) <= 1e-9

    def test_naive_recall_matches_report(self, tmp_path, separable):
        graph, _ = separable
        tweets = [
            Tweet(
                id=f"r{i}",
                text=" ".join(private_clues((i + 1) % 5) + [private_clues(i)[0]]),
                gold_entity=SEP_IDS[i],
            )
            for i in range(5)
        ]
        for k in (1, 2, 5):
            recall, records = recall_at_k(graph, tweets, k=k)
            path = tmp_path / f"recall{k}.tsv"
            dump_predictions(records, path)
            assert abs(recall_from_dump(path, k) - recall) <= 1e-9

    def test_naive_combined_matches_report(self, tmp_path):
        graph, implicit, explicit, nil = separable_combined_parts()
        train_impl, mixed = mix_evaluation_set(implicit, explicit, nil, seed=0)
        ranker = train(training_queries(graph, train_impl))
        stub = ExplicitLinkerStub({explicit[0].id: explicit[0].gold_entity})
        report = combined_f1(stub, mixed, graph, ranker)
        path = tmp_path / "combined.tsv"
        dump_combined(report.records, path)
        scored = score_combined(path)
        for arm, metrics in (
            ("el_only", report.el_only),
            ("combined", report.combined),
        ):
            assert abs(scored[arm]["precision"] - metrics.precision) <= 1e-9
            assert abs(scored[arm]["recall"] - metrics.recall) <= 1e-9
            assert abs(scored[arm]["f1"] - metrics.f1) <= 1e-9

    def test_combined_record_dump_is_line_per_tweet(self, tmp_path):
        records = [
            CombinedRecord("t1", "implicit", "e1", "", "e1"),
            CombinedRecord("t2", "nil", "", "", ""),
        ]
        path = tmp_path / "combined.tsv"
        dump_combined(records, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 2 + len(records)
        assert lines[2] == "t1\timplicit\te1\t\te1"
