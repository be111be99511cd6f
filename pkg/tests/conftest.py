"""Shared fixtures: a hand-built separable graph with exactly known
math, a file-based demo corpus for pipeline/CLI tests, and random
generators for the oracle comparisons."""

from __future__ import annotations

import json
import random
import string
from collections import Counter
from datetime import date

import pytest

from emnlink.corpus import EntityRecord, PhraseDictionary, Triple, Tweet
from emnlink.emn import ClueOrigin, ClueStat, EMNGraph, assemble
from emnlink.knowledge import TemporalSalience
from emnlink.pipeline import CorpusBundle
from emnlink.textprep import ClueSet

# ---------------------------------------------------------------------------
# Family A: hand-built separable graph.  Five entities, three private
# unigram clues each plus one clue shared by everyone, equal salience.
# Every gold tweet carries its entity's three private clues and exactly
# one clue of the next entity, so each query has two candidates and the
# gold one always has the larger cosine.

SEP_IDS = ("m1", "m2", "m3", "m4", "m5")


def private_clues(entity_index: int) -> list[str]:
    suffix = string.ascii_lowercase[entity_index]
    return [f"zeta{suffix}", f"yora{suffix}", f"xilo{suffix}"]


def build_separable(
    tweets_per_entity: int = 5, salience: tuple[int, ...] | None = None
) -> tuple[EMNGraph, list[Tweet]]:
    models = {}
    saliences = {}
    records = {}
    values = salience or (10,) * len(SEP_IDS)
    for i, entity_id in enumerate(SEP_IDS):
        model = {name: ClueStat(2, ClueOrigin.CONTEXTUAL) for name in private_clues(i)}
        model["film"] = ClueStat(1, ClueOrigin.CONTEXTUAL)
        models[entity_id] = model
        saliences[entity_id] = TemporalSalience(values[i])
        records[entity_id] = EntityRecord(
            entity_id=entity_id, label=f"Feature {entity_id}", entity_type="movie"
        )
    graph = assemble(
        models, saliences, records, built_at=date(2014, 6, 1), entity_type="movie"
    )
    tweets = []
    for i, entity_id in enumerate(SEP_IDS):
        own = private_clues(i)
        other = private_clues((i + 1) % len(SEP_IDS))[0]
        for j in range(tweets_per_entity):
            tweets.append(
                Tweet(
                    id=f"t_{entity_id}_{j}",
                    text=" ".join(own + [other]),
                    gold_entity=entity_id,
                )
            )
    return graph, tweets


@pytest.fixture()
def separable():
    return build_separable()


# ---------------------------------------------------------------------------
# Family B: file-based demo corpus.  Five movies; per movie the content
# words split into three disjoint sources so ablation effects are exactly
# controllable:
#   label tokens      appear in the pool tweets (explicit mentions)
#   actor name        a phrase, reachable both from triples and the pool
#   genre words       literal triple objects, never in the pool
#   context words     only in the pool tweets
# Gold tweets mix three own words with one word of the next movie.

MOVIES = [
    {
        "id": "m_grav",
        "label": "Gravity",
        "actor": ("p_sb", "sandra bullock"),
        "genre": ("orbital", "survival"),
        "ctx": ("stranded", "orbit", "debris"),
    },
    {
        "id": "m_mart",
        "label": "The Martian",
        "actor": ("p_md", "matt damon"),
        "genre": ("botanist", "rescue"),
        "ctx": ("potatoes", "sols", "farming"),
    },
    {
        "id": "m_inter",
        "label": "Interstellar",
        "actor": ("p_ah", "anne hathaway"),
        "genre": ("wormhole", "voyage"),
        "ctx": ("corn", "dust", "gargantua"),
    },
    {
        "id": "m_moon",
        "label": "Moonlight",
        "actor": ("p_ma", "mahershala ali"),
        "genre": ("tender", "chiron"),
        "ctx": ("miami", "beach", "moonrise"),
    },
    {
        "id": "m_arr",
        "label": "Arrival",
        "actor": ("p_aa", "amy adams"),
        "genre": ("heptapod", "linguistics"),
        "ctx": ("circles", "ink", "mist"),
    },
]

STOPWORDS = ["the", "a", "an", "was", "is", "in", "of", "and", "on", "to", "rt"]
AS_OF = "2014-06-01"
# In-window page view pairs per movie, plus one stale row far outside.
VIEWS = {"m_grav": (300, 200), "m_mart": (250, 150), "m_inter": (200, 100),
         "m_moon": (120, 80), "m_arr": (60, 40)}


def _pool_tweets() -> list[dict]:
    rows = []
    n = 0
    for movie, keyword in zip(MOVIES, ("movie", "film", "movie", "film", "movie")):
        ctx = movie["ctx"]
        actor = movie["actor"][1]
        texts = [
            f"{movie['label']} {keyword} {ctx[0]} {ctx[1]} so good",
            f"{movie['label']} {keyword} {ctx[2]} with {actor}",
            f"just saw {movie['label']} {keyword} {ctx[0]} {ctx[2]} again",
        ]
        for text in texts:
            n += 1
            rows.append(
                {
                    "id": f"c{n:02d}",
                    "text": text,
                    "timestamp": f"2014-05-{10 + n:02d}T12:00:00Z",
                }
            )
    return rows


def _gold_tweets() -> list[dict]:
    rows = []
    n = 0
    for i, movie in enumerate(MOVIES):
        nxt = MOVIES[(i + 1) % len(MOVIES)]
        genre, ctx = movie["genre"], movie["ctx"]
        # A: mostly factual words; B: context words only; C: mixed.
        texts = [
            f"{genre[0]} {genre[1]} {ctx[0]} {nxt['genre'][0]}",
            f"{ctx[0]} {ctx[1]} {ctx[2]} {nxt['genre'][1]}",
            f"{genre[0]} {ctx[0]} {ctx[1]} {nxt['actor'][1].split()[1]}",
        ]
        for text in texts:
            n += 1
            rows.append(
                {
                    "id": f"g{n:02d}",
                    "text": text,
                    "gold_entity": movie["id"],
                    "gold_label": "implicit",
                }
            )
    return rows


def _explicit_tweets() -> list[dict]:
    rows = []
    n = 0
    for movie in MOVIES:
        for phrase in ("loved", "rewatched"):
            n += 1
            rows.append(
                {
                    "id": f"x{n:02d}",
                    "text": f"{phrase} {movie['label']} movie yesterday",
                    "gold_entity": movie["id"],
                    "gold_label": "explicit",
                }
            )
    return rows


def _nil_tweets() -> list[dict]:
    fillers = [
        "quinoa brunch downtown vibes",
        "traffic jam ruined my morning",
        "new sneakers feel amazing",
        "thunderstorm cancelled our picnic",
        "grandma sent cookies today",
        "sourdough starter finally rose",
    ]
    return [
        {"id": f"n{i:02d}", "text": text, "gold_label": "nil"}
        for i, text in enumerate(fillers, start=1)
    ]


def write_demo_corpus(root) -> dict:
    """Write the demo corpus files under root and return their paths."""
    paths = {
        "triples": root / "triples.tsv",
        "labels": root / "labels.tsv",
        "tweets": root / "tweets.jsonl",
        "pageviews": root / "pageviews.tsv",
        "phrases": root / "phrases.txt",
        "stopwords": root / "stopwords.txt",
        "gold": root / "gold.jsonl",
        "explicit": root / "explicit.jsonl",
        "nil": root / "nil.jsonl",
    }
    label_rows = []
    triple_rows = []
    view_rows = []
    for movie in MOVIES:
        label_rows.append(f"{movie['id']}\t{movie['label']}\t\tmovie")
        person_id, person_name = movie["actor"]
        label_rows.append(f"{person_id}\t{person_name.title()}\t\tperson")
        triple_rows.append(f"{movie['id']}\tstarring\t{person_id}\t0")
        triple_rows.append(
            f"{movie['id']}\tgenre\t{movie['genre'][0]} {movie['genre'][1]}\t1"
        )
        triple_rows.append(f"{person_id}\tbirthplace\tsomewhere far\t1")
        first, second = VIEWS[movie["id"]]
        view_rows.append(f"{movie['id']}\t2014-05-25\t{first}")
        view_rows.append(f"{movie['id']}\t2014-05-28\t{second}")
        view_rows.append(f"{movie['id']}\t2014-01-01\t9999")
    paths["labels"].write_text("\n".join(label_rows) + "\n", encoding="utf-8")
    paths["triples"].write_text("\n".join(triple_rows) + "\n", encoding="utf-8")
    paths["pageviews"].write_text("\n".join(view_rows) + "\n", encoding="utf-8")
    paths["phrases"].write_text(
        "\n".join(m["actor"][1] for m in MOVIES) + "\n", encoding="utf-8"
    )
    paths["stopwords"].write_text("\n".join(STOPWORDS) + "\n", encoding="utf-8")
    for key, rows in (
        ("tweets", _pool_tweets()),
        ("gold", _gold_tweets()),
        ("explicit", _explicit_tweets()),
        ("nil", _nil_tweets()),
    ):
        paths[key].write_text(
            "\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8"
        )
    return paths


@pytest.fixture(scope="session")
def demo_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("demo_corpus")
    return write_demo_corpus(root)


@pytest.fixture(scope="session")
def demo_config_kwargs():
    return dict(
        entity_type="movie",
        type_keywords=("movie", "film"),
        as_of_date=date.fromisoformat(AS_OF),
    )


# ---------------------------------------------------------------------------
# Family C: factual-only bundle.  Every contextual tweet repeats only
# words already present in the factual texts (label included, via the
# title relation) with count 1, so the graphs built with and without
# contextual knowledge carry the same clues, frequencies, and edges.


def factual_only_bundle() -> tuple[CorpusBundle, list[Tweet]]:
    triples = (
        Triple("fa", "title", "Alpha", True),
        Triple("fa", "genre", "anchor ember hull", True),
        Triple("fb", "title", "Beta", True),
        Triple("fb", "genre", "basalt flint hull", True),
        Triple("fc", "title", "Cedar", True),
        Triple("fc", "genre", "cedar moss", True),
    )
    records = {
        "fa": EntityRecord("fa", "Alpha", "", "movie"),
        "fb": EntityRecord("fb", "Beta", "", "movie"),
        "fc": EntityRecord("fc", "Cedar", "", "movie"),
    }
    pool = (
        Tweet(id="p1", text="Alpha anchor ember hull"),
        Tweet(id="p2", text="Beta basalt flint hull"),
        Tweet(id="p3", text="Cedar moss"),
    )
    gold = [
        Tweet(id="ft1", text="anchor ember hull", gold_entity="fa"),
        Tweet(id="ft2", text="basalt flint hull", gold_entity="fb"),
        Tweet(id="ft3", text="ember hull", gold_entity="fa"),
        Tweet(id="ft4", text="basalt hull", gold_entity="fb"),
    ]
    bundle = CorpusBundle(
        tweets=pool,
        triples=triples,
        records=records,
        views=(),
        phrases=PhraseDictionary(),
        stopwords=frozenset(),
    )
    return bundle, gold


# ---------------------------------------------------------------------------
# Random generators for oracle tests.


def random_graph(
    rng: random.Random, max_entities: int = 200, max_clues: int = 2000
) -> EMNGraph:
    n_entities = rng.randint(2, max_entities)
    n_clues = rng.randint(1, max_clues)
    clue_names = [f"c{i:04d}" for i in range(n_clues)]
    models = {}
    saliences = {}
    records = {}
    for i in range(n_entities):
        entity_id = f"e{i:03d}"
        chosen = rng.sample(clue_names, rng.randint(1, min(12, n_clues)))
        models[entity_id] = {
            name: ClueStat(
                rng.randint(1, 5),
                rng.choice(
                    [
                        ClueOrigin.FACTUAL,
                        ClueOrigin.CONTEXTUAL,
                        ClueOrigin.FACTUAL | ClueOrigin.CONTEXTUAL,
                    ]
                ),
            )
            for name in chosen
        }
        saliences[entity_id] = TemporalSalience(rng.randint(0, 1000))
        records[entity_id] = EntityRecord(entity_id=entity_id, label=f"Entity {i}")
    return assemble(models, saliences, records, built_at=date(2014, 6, 1))


def random_clueset(rng: random.Random, graph: EMNGraph) -> ClueSet:
    """A tweet-side clue set: some in-vocabulary names, some unknown."""
    vocab = sorted(graph.clues)
    in_vocab = rng.sample(vocab, min(len(vocab), rng.randint(1, 8)))
    unknown = [f"zz{i}" for i in range(rng.randint(0, 3))]
    counts = Counter()
    for name in in_vocab + unknown:
        counts[name] = rng.randint(1, 3)
    phrases = Counter({n: c for n, c in counts.items() if " " in n})
    unigrams = Counter({n: c for n, c in counts.items() if " " not in n})
    return ClueSet(phrases=phrases, unigrams=unigrams)
