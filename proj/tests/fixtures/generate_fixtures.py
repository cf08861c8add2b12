#!/usr/bin/env python3
"""Regenerates the test fixtures and their expected values.

The expected values are computed here with a separate implementation of span
extension, question generation, deduplication and filtering, so the C++ tests
compare against numbers that were not produced by the code under test.

    python3 tests/fixtures/generate_fixtures.py
"""

import json
import random
import re
from pathlib import Path

HERE = Path(__file__).resolve().parent

# --------------------------------------------------------------------------
# trees


def parse_tree(text):
    toks = re.findall(r"\(|\)|[^\s()]+", text)
    pos = 0

    def node():
        nonlocal pos
        assert toks[pos] == "("
        pos += 1
        label = toks[pos]
        pos += 1
        if toks[pos] not in ("(", ")"):
            word = toks[pos]
            pos += 1
            assert toks[pos] == ")"
            pos += 1
            return {"label": label, "word": word, "children": []}
        kids = []
        while toks[pos] == "(":
            kids.append(node())
        assert toks[pos] == ")"
        pos += 1
        return {"label": label, "word": None, "children": kids}

    root = node()
    assert pos == len(toks)
    return root


def annotate(tree, start=0):
    """Adds token spans; returns the end index."""
    if tree["word"] is not None:
        tree["span"] = (start, start + 1)
        return start + 1
    end = start
    for kid in tree["children"]:
        end = annotate(kid, end)
    tree["span"] = (start, end)
    return end


def all_nodes(tree):
    yield tree
    for kid in tree["children"]:
        yield from all_nodes(kid)


def leaves(tree):
    if tree["word"] is not None:
        return [tree["word"]]
    out = []
    for kid in tree["children"]:
        out += leaves(kid)
    return out


CANDIDATES = {"NP": "NP", "ADJP": "ADJP", "VP": "VP", "S": "S", "SBAR": "S"}


def bare(label):
    return re.split(r"[-=]", label)[0] if not label.startswith("-") else label


def extend(tree, n, ne, omega):
    """Largest candidate constituent strictly containing the NE within omega."""
    best = None
    for node in all_nodes(tree):
        if node["word"] is not None:
            continue
        s, e = node["span"]
        if not (s <= ne[0] and ne[1] <= e) or (s, e) == tuple(ne):
            continue
        kind = CANDIDATES.get(bare(node["label"]))
        if kind is None or (e - s) * 100 > omega * n:
            continue
        if best is None or (e - s) > (best[1] - best[0]):
            best = (s, e, kind)
    if best is None:
        return (ne[0], ne[1], "NE")
    return best


# --------------------------------------------------------------------------
# questions

MASK = {
    "PERSON": "PERSON_NORP_ORG", "NORP": "PERSON_NORP_ORG", "ORG": "PERSON_NORP_ORG",
    "GPE": "PLACE", "LOC": "PLACE", "FAC": "PLACE",
    "DATE": "TEMPORAL", "TIME": "TEMPORAL",
    "MONEY": "NUMERIC", "CARDINAL": "NUMERIC", "ORDINAL": "NUMERIC", "QUANTITY": "NUMERIC", "PERCENT": "NUMERIC",
}
WH = {"PERSON_NORP_ORG": "Who", "PLACE": "Where", "TEMPORAL": "When", "THING": "What"}


def wh_word(label):
    cat = MASK.get(label, "THING")
    if cat == "NUMERIC":
        return "How much" if label == "MONEY" else "How many"
    return WH[cat]


def question(tokens, span, label, initial_entity):
    before = list(tokens[: span[0]])
    after = list(tokens[span[1]:])
    while after and after[-1] in (".", "!", "?"):
        after.pop()
    if before and not initial_entity:
        before[0] = before[0].lower()
    return [wh_word(label)] + after + before


# --------------------------------------------------------------------------
# corpus

ESTILL_TREE = (
    "(S (NP (NP (DT The) (NNP Town)) (PP (IN of) (NP (NNP Estill)))) "
    "(VP (VBZ is) (VBN located) (PP (IN in) (NP (NP (DT the) (JJ southern) (NN half)) "
    "(IN of) (NP (NNP Hampton) (NNP County))))) (. .))"
)


def sentence(tree, ner):
    t = parse_tree(tree)
    return {"tokens": leaves(t), "ner": [{"start": s, "end": e, "label": l} for s, e, l in ner], "tree": tree}


PLACES = ["Paris", "Boston", "Denver", "Madrid", "Lagos", "Oslo", "Lima", "Cairo", "Tokyo", "Perth"]
PEOPLE = ["Alice", "Bruno", "Chen", "Dana", "Emeka", "Farah", "Goran", "Hana", "Ivan", "Jorge"]
ORGS = ["Acme", "Globex", "Initech", "Umbrella", "Hooli", "Vandelay"]
YEARS = ["1850", "1901", "1923", "1968", "1977", "2004"]
AMOUNTS = ["5", "12", "40", "7", "300"]


def t_estill_like(i):
    town, county = PLACES[i % 10], PEOPLE[i % 10]
    tree = (
        f"(S (NP (NP (DT The) (NNP Town)) (PP (IN of) (NP (NNP {town})))) "
        f"(VP (VBZ is) (VBN located) (PP (IN in) (NP (NP (DT the) (JJ southern) (NN half)) "
        f"(IN of) (NP (NNP {county}) (NNP County))))) (. .))"
    )
    return sentence(tree, [(11, 13, "GPE")])


def t_ne_only(i):
    return sentence(f"(S (NP (NNP {PEOPLE[(i + 3) % 10]})) (VP (VBD won)) (. .))", [(0, 1, "PERSON")])


def t_np(i):
    tree = (
        f"(S (NP (NP (DT The) (NN mayor)) (PP (IN of) (NP (NNP {PLACES[(i + 1) % 10]})))) "
        f"(VP (VBD resigned) (NP (NN yesterday))) (. .))"
    )
    return sentence(tree, [(3, 4, "GPE")])


def t_adjp(i):
    tree = (
        f"(S (ADJP (JJ Famous) (PP (IN in) (NP (NNP {PLACES[(i + 2) % 10]})))) (, ,) "
        f"(NP (DT the) (NN band)) (VP (VBD toured)) (. .))"
    )
    return sentence(tree, [(2, 3, "GPE")])


def t_sbar(i):
    tree = (
        f"(S (NP (PRP He)) (VP (VBD said) (SBAR (IN that) (S (NP (NNP {PEOPLE[(i + 4) % 10]})) "
        f"(VP (VBD won) (NP (DT the) (JJ final) (NN match)) (ADVP (RB very) (RB easily)))))) (. .))"
    )
    return sentence(tree, [(3, 4, "PERSON")])


def t_whole(i):
    tree = f"(NP (NNP New) (NNP {PLACES[(i + 5) % 10]}) (NNP City))"
    return sentence(tree, [(0, 3, "GPE")])


def t_money(i):
    tree = (
        f"(S (NP (DT The) (NN company)) (VP (VBD paid) (NP (QP ($ $) (CD {AMOUNTS[i % 5]}) (CD million))) "
        f"(PP (IN in) (NP (NNS fines)))) (. .))"
    )
    return sentence(tree, [(3, 6, "MONEY")])


def t_possessive(i):
    tree = (
        f"(S (NP (NP (NNP {PEOPLE[(i + 6) % 10]}) (POS 's)) (JJ new) (NN album)) "
        f"(VP (VBD sold) (ADVP (RB well))) (. .))"
    )
    return sentence(tree, [(0, 1, "PERSON")])


def t_visit(i):
    tree = (
        f"(S (NP (NN Yesterday)) (, ,) (NP (NNP {PEOPLE[(i + 7) % 10]})) "
        f"(VP (VBD visited) (NP (NP (DT the) (NN museum)) (PP (IN in) (NP (NNP {PLACES[(i + 8) % 10]}))))) (. .))"
    )
    return sentence(tree, [(2, 3, "PERSON"), (7, 8, "GPE")])


def t_founded(i):
    tree = (
        f"(S (NP (NNP {ORGS[i % 6]})) (VP (VBD was) (VP (VBN founded) (PP (IN in) (NP (CD {YEARS[i % 6]}))))) (. .))"
    )
    return sentence(tree, [(0, 1, "ORG"), (4, 5, "DATE")])


def t_pair(i):
    tree = (
        "(S (NP (NP (NNP Alice)) (CC and) (NP (NNP Bruno))) (VP (VBD visited) (NP (NNP Lima))) (. .))"
    )
    return sentence(tree, [(0, 1, "PERSON"), (2, 3, "PERSON"), (4, 5, "GPE")])


def mini_corpus():
    plan = (
        [t_estill_like] * 5 + [t_ne_only] * 5 + [t_np] * 5 + [t_adjp] * 5 + [t_sbar] * 5
        + [t_whole] * 3 + [t_money] * 5 + [t_possessive] * 5 + [t_visit] * 5 + [t_founded] * 6 + [t_pair]
    )
    sents = [make(i) for i, make in enumerate(plan)]
    # Interleave so documents mix templates; the first 30 sentences form ten
    # three-sentence documents, the rest are standalone.
    order = random.Random(11).sample(range(len(sents)), len(sents))
    out = []
    for pos, idx in enumerate(order):
        rec = {"id": f"s{pos:02d}"}
        if pos < 30:
            rec["doc"] = f"d{pos // 3}"
        rec.update(sents[idx])
        out.append(rec)
    return out


def build(records, omega=80.0, ne_only=False):
    passages = []
    for rec in records:
        doc = rec.get("doc")
        if doc and passages and passages[-1]["doc"] == doc:
            passages[-1]["sents"].append(rec)
        else:
            passages.append({"doc": doc, "sents": [rec]})
    instances, seen, dupes = [], set(), 0
    for p in passages:
        context = [t for s in p["sents"] for t in s["tokens"]]
        offset = 0
        for s in p["sents"]:
            tree = parse_tree(s["tree"])
            n = annotate(tree)
            initial_entity = any(ne["start"] == 0 for ne in s["ner"])
            for ne in s["ner"]:
                span = (ne["start"], ne["end"])
                a0, a1, kind = (span[0], span[1], "NE") if ne_only else extend(tree, n, span, omega)
                q = question(s["tokens"], (a0, a1), ne["label"], initial_entity)
                key = (tuple(context), tuple(q), a0 + offset, a1 + offset)
                if key in seen:
                    dupes += 1
                    continue
                seen.add(key)
                instances.append({
                    "sentence": s["id"],
                    "answer": " ".join(s["tokens"][a0:a1]),
                    "answer_start": a0 + offset,
                    "answer_end": a1 + offset,
                    "answer_type": kind,
                    "question": " ".join(q),
                })
            offset += len(s["tokens"])
    return instances, dupes


def tally(instances):
    types = {t: 0 for t in ["NE", "NP", "ADJP", "VP", "S"]}
    hist = [0] * 6
    for inst in instances:
        types[inst["answer_type"]] += 1
        length = inst["answer_end"] - inst["answer_start"]
        hist[min((length - 1) // 5, 5)] += 1
    return types, hist


# --------------------------------------------------------------------------
# filter fixture

WORDS = "river valley north old stone bridge market harbor tower garden mill road hill lake field".split()
NE_WORDS = ["Tim Cook", "New York", "Ada Lovelace", "Rio de Janeiro", "Mount Kenya", "Grace Hopper"]


def filter_fixture():
    rng = random.Random(2024)
    instances, preds = [], []
    types = ["NE", "NP", "ADJP", "VP", "S"]
    for i in range(200):
        ctx = [rng.choice(WORDS) for _ in range(rng.randint(8, 20))]
        kind = types[0] if i % 2 == 0 else types[1 + (i // 2) % 4]
        answer_len = rng.randint(2, 3) if kind == "NE" else rng.randint(2, 6)
        start = rng.randint(0, len(ctx) - answer_len)
        if kind == "NE":
            ne = rng.choice(NE_WORDS).split()
            answer_len = len(ne)
            start = min(start, len(ctx) - answer_len)
            ctx[start:start + answer_len] = ne
        end = start + answer_len
        inst = {
            "id": f"f{i:03d}",
            "context": " ".join(ctx),
            "question": f"What {ctx[0]} {ctx[-1]}",
            "answers": [{"text": " ".join(ctx[start:end]), "answer_start": len(" ".join(ctx[:start])) + (1 if start else 0)}],
            "answer_type": kind,
            "pseudo_ner_label": "PERSON",
            "source_ne": {"start": start, "end": end},
            "sentence": {"start": 0, "end": len(ctx)},
            "initial_entity": False,
        }
        instances.append((inst, ctx, start, end))

        case = i % 10
        if case == 9 and i % 20 == 19:
            continue  # no prediction for this instance
        entries = []

        def other():
            while True:
                s = rng.randint(0, len(ctx) - 1)
                e = rng.randint(s + 1, min(len(ctx), s + 4))
                if (s, e) != (start, end) and not (start <= s and e <= end):
                    return s, e

        gold_rank = {0: 0, 1: 1, 2: 2, 3: 4, 4: 9}.get(case)
        sub_prob = None
        if case in (5, 6, 7, 8):
            sub_prob = [0.05, 0.1, 0.15, 0.45][case - 5]
        count = rng.randint(3, 10)
        if gold_rank is not None:
            count = max(count, gold_rank + 1)
        spans = []
        while len(spans) < count:
            spans.append(other())
        if gold_rank is not None:
            spans[gold_rank] = (start, end)
        if sub_prob is not None:
            sub_at = rng.randint(0, count - 1)
            spans[sub_at] = (start, start + 1) if rng.random() < 0.5 else (end - 1, end)
        probs = sorted((round(rng.uniform(0.0, 0.6), 3) for _ in spans), reverse=True)
        if sub_prob is not None:
            probs[sub_at] = sub_prob
            for j in range(sub_at):
                probs[j] = max(probs[j], sub_prob)
            for j in range(sub_at + 1, len(probs)):
                probs[j] = min(probs[j], sub_prob)
        for (s, e), p in zip(spans, probs):
            entries.append({"text": " ".join(ctx[s:e]), "start": s, "end": e, "prob": p})
        preds.append({"id": inst["id"], "nbest": entries})
    return instances, preds


def decide(inst, ctx, start, end, pred, k, gamma):
    if pred is None:
        return "MISSING"
    for e in pred["nbest"][:k]:
        if e["start"] == start and e["end"] == end:
            return "TOP_K"
    if inst["answer_type"] == "NE":
        for e in pred["nbest"]:
            if e["prob"] > gamma and e["start"] < e["end"] and start <= e["start"] and e["end"] <= end:
                return "SUBSTRING"
    return "REJECTED"


# --------------------------------------------------------------------------


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def main():
    estill = {"id": "estill", "tokens": leaves(parse_tree(ESTILL_TREE)),
              "ner": [{"start": 11, "end": 13, "label": "GPE"}], "tree": ESTILL_TREE}
    write_jsonl(HERE / "estill.jsonl", [estill])

    records = mini_corpus()
    write_jsonl(HERE / "mini_corpus.jsonl", records)
    diverse, dupes = build(records)
    ne_only, ne_dupes = build(records, ne_only=True)
    types, hist = tally(diverse)
    by_omega = {}
    for omega in (20, 40, 60, 80, 100):
        inst, _ = build(records, omega=float(omega))
        by_omega[str(omega)] = tally(inst)[0]
    expected = {
        "sentences": len(records),
        "entities": sum(len(r["ner"]) for r in records),
        "instances": len(diverse),
        "duplicates_removed": dupes,
        "type_counts": types,
        "length_histogram": hist,
        "type_counts_by_omega": by_omega,
        "ne_only_instances": len(ne_only),
        "ne_only_length_histogram": tally(ne_only)[1],
        "answers": diverse,
    }
    (HERE / "mini_corpus_expected.json").write_text(json.dumps(expected, indent=1) + "\n")

    with open(HERE / "three_lines_one_bad.jsonl", "w", newline="\n") as f:
        f.write(json.dumps({"id": "a", **sentence("(S (NP (NNP Oslo)) (VP (VBZ sleeps)))", [(0, 1, "GPE")])}) + "\n")
        f.write('{"id": "b", "tokens": ["x"], "ner": [], "tree": "(S (NP"}\n')
        f.write(json.dumps({"id": "c", **sentence("(S (NP (NNP Lima)) (VP (VBZ wakes)))", [(0, 1, "GPE")])}) + "\n")

    instances, preds = filter_fixture()
    write_jsonl(HERE / "filter_instances.jsonl", [i for i, *_ in instances])
    write_jsonl(HERE / "filter_predictions.jsonl", preds)
    by_id = {p["id"]: p for p in preds}
    sweep = {}
    for k in (1, 2, 3, 5, 10):
        for gamma in (0.0, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0):
            reasons = [decide(i, c, s, e, by_id.get(i["id"]), k, gamma) for i, c, s, e in instances]
            sweep[f"k={k},gamma={gamma}"] = {
                "kept": [i["id"] for (i, *_), r in zip(instances, reasons) if r in ("TOP_K", "SUBSTRING")],
                "top_k": reasons.count("TOP_K"),
                "substring": reasons.count("SUBSTRING"),
                "rejected": reasons.count("REJECTED"),
                "missing": reasons.count("MISSING"),
            }
    default = [decide(i, c, s, e, by_id.get(i["id"]), 1, 0.1) for i, c, s, e in instances]
    (HERE / "filter_expected.json").write_text(json.dumps(
        {"default_reasons": {i["id"]: r for (i, *_), r in zip(instances, default)}, "sweep": sweep}, indent=1) + "\n")


if __name__ == "__main__":
    main()
