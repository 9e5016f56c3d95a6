#!/usr/bin/env python3
"""Regenerates the bundled toy dataset under data/toy/ (deterministic)."""

import argparse
import json
import random
from pathlib import Path

NOTE_WORDS = ("outfit lipstick skincare cafe brunch hiking weekend sunset camera film vintage "
              "recipe noodles dumplings bakery matcha latte city walk museum playlist "
              "budget travel hostel beach island sneakers denim jacket routine glow").split()
QA_WORDS = ("question answer recommend tips guide which best where cheap review honest "
            "opinion compare experience worth beginner advice help anyone tried").split()
WEB_WORDS = ("government economy market policy report annual growth industry research "
             "university science climate energy transport health system public data "
             "analysis history culture law court federal regional council").split()
NEWS_WORDS = ("reported officials announced tuesday statement according sources "
              "percent quarter investors shares company minister election vote "
              "spokesman confirmed agreement talks").split()
ZH_PHRASES = ["今天的穿搭", "超级好吃", "周末去哪儿", "分享一下", "真的绝了", "小红书", "种草", "拔草",
              "推荐给大家", "护肤心得", "旅行攻略", "咖啡店打卡"]
ENDINGS = [".", "!", "?", "。", "！"]

SNS_DOMAINS = {"sns_notes": NOTE_WORDS, "sns_qa": QA_WORDS}
GENERAL_DOMAINS = {"general_web": WEB_WORDS, "general_news": NEWS_WORDS}


def sentence(rng, words, zh):
    n = rng.randint(5, 14)
    toks = [rng.choice(words) for _ in range(n)]
    if zh and rng.random() < 0.5:
        toks.insert(rng.randrange(len(toks) + 1), rng.choice(ZH_PHRASES))
    toks[0] = toks[0].capitalize()
    return " ".join(toks) + rng.choice(ENDINGS[:3] if not zh else ENDINGS)


def paragraph(rng, words, zh, lo, hi):
    return " ".join(sentence(rng, words, zh) for _ in range(rng.randint(lo, hi)))


def inject(rng, text, kind):
    if kind == "html":
        tag = rng.choice(["<div class=\"post\">", "<br/>", "<a href=\"x\">", "<p>", "<!-- ad -->", "</span>"])
        cut = rng.randrange(len(text))
        return text[:cut] + tag + text[cut:]
    if kind == "repetition":
        s = text.split(".")[0].strip() or "same line again"
        return " ".join([s + "."] * rng.randint(6, 10))
    if kind == "short":
        return " ".join(text.split()[: rng.randint(1, 6)])
    raise ValueError(kind)


def doc(id_, source, domain, text, parent=None, likes=None):
    inter = None
    if likes is not None:
        inter = {"parent_id": parent, "likes": likes}
    return {"id": id_, "source": source, "domain": domain, "text": text, "interactions": inter}


def make_corpus(rng, n_docs):
    docs = []
    counter = 0

    def next_id(prefix):
        nonlocal counter
        counter += 1
        return f"{prefix}-{counter:05d}"

    while len(docs) < n_docs:
        roll = rng.random()
        if roll < 0.45:
            # an SNS note with a comment thread
            domain = rng.choice(list(SNS_DOMAINS))
            words = SNS_DOMAINS[domain]
            root = next_id("note")
            docs.append(doc(root, "sns", domain, paragraph(rng, words, True, 2, 8), None, rng.randint(0, 500)))
            parents = [root]
            for _ in range(rng.randint(0, 5)):
                cid = next_id("cmt")
                parent = rng.choice(parents)
                docs.append(doc(cid, "sns", domain, paragraph(rng, words, True, 1, 3), parent, rng.randint(0, 80)))
                parents.append(cid)
        elif roll < 0.5:
            # a reply whose parent never made it into the crawl
            domain = rng.choice(list(SNS_DOMAINS))
            docs.append(doc(next_id("cmt"), "sns", domain, paragraph(rng, SNS_DOMAINS[domain], True, 1, 3),
                            f"missing-{rng.randint(0, 99999):05d}", rng.randint(0, 30)))
        else:
            domain = rng.choice(list(GENERAL_DOMAINS))
            docs.append(doc(next_id("web"), "general", domain, paragraph(rng, GENERAL_DOMAINS[domain], False, 3, 20)))
    docs = docs[:n_docs]
    for d in docs:
        r = rng.random()
        if r < 0.05:
            d["text"] = inject(rng, d["text"], "html")
        elif r < 0.10:
            d["text"] = inject(rng, d["text"], "repetition")
        elif r < 0.14:
            d["text"] = inject(rng, d["text"], "short")
    return docs


def make_reference(rng, n):
    out = []
    for i in range(n):
        if i % 2 == 0:
            domain = rng.choice(list(SNS_DOMAINS))
            out.append(doc(f"ref-{i:04d}", "sns", domain, paragraph(rng, SNS_DOMAINS[domain], True, 3, 8), None, 0))
        else:
            domain = rng.choice(list(GENERAL_DOMAINS))
            out.append(doc(f"ref-{i:04d}", "general", domain, paragraph(rng, GENERAL_DOMAINS[domain], False, 3, 8)))
    return out


CATEGORIES = ["beauty", "food", "travel", "fashion", "tech", "fitness"]
INTENTS = ["purchase", "how-to", "recommendation", "comparison"]
MC_TASKS = {
    "Note Taxonomy": ("content_understanding", CATEGORIES),
    "Query Classification": ("content_understanding", CATEGORIES),
    "Query Intent Recognition": ("content_understanding", INTENTS),
    "Query-Note Relevance": ("semantic_matching", ["relevant", "partially relevant", "irrelevant"]),
    "Query-Note Retrieval": ("semantic_matching", ["note A", "note B", "note C", "note D"]),
    "Post-View Search": ("user_behavior_modeling", ["matcha latte", "sunset beach", "denim jacket", "film camera"]),
}
EXTRACT_TASKS = {
    "Hashtag Prediction": "information_extraction",
    "Machine Reading Comprehension": "information_extraction",
    "Highlight Word Detection": "information_extraction",
}
GEN_TASKS = {
    "Emotional Companion Dialogue": "dialogue",
    "Role-playing Dialogue": "dialogue",
    "SNS Domain Translation": "translation",
}


def make_sns_tasks(rng, per_task):
    out = []
    for task, (cap, labels) in MC_TASKS.items():
        for _ in range(per_task):
            opts = rng.sample(labels, min(len(labels), 4))
            ans = rng.choice(opts)
            s = {"task": task, "capability": cap, "format": "multiple_choice",
                 "prompt": f"{task}: {sentence(rng, NOTE_WORDS, True)}", "options": opts, "answer": ans}
            if rng.random() < 0.7:
                s["primary_label"] = rng.choice(CATEGORIES)
                s["secondary_label"] = s["primary_label"] + "/" + rng.choice(["daily", "review", "guide"])
            out.append(s)
    for task, cap in EXTRACT_TASKS.items():
        for _ in range(per_task):
            text = sentence(rng, NOTE_WORDS, True)
            words = text.rstrip(".!?。！").split()
            span = " ".join(words[1:1 + rng.randint(1, 3)])
            out.append({"task": task, "capability": cap, "format": "extraction",
                        "prompt": f"Extract the key phrase: {text}", "options": None,
                        "answer": ("#" + span.replace(" ", "")) if task == "Hashtag Prediction" else span})
    for task, cap in GEN_TASKS.items():
        for _ in range(per_task):
            out.append({"task": task, "capability": cap, "format": "generation",
                        "prompt": f"{task}: {sentence(rng, NOTE_WORDS, True)}", "options": None,
                        "answer": paragraph(rng, NOTE_WORDS, task != "SNS Domain Translation", 1, 4)})
    rng.shuffle(out)
    return out


def make_general_sft(rng, n):
    out = []
    for i in range(n):
        words = rng.choice([WEB_WORDS, NEWS_WORDS, QA_WORDS])
        out.append({"instruction": "Answer the question. " + sentence(rng, words, False),
                    "input": "" if rng.random() < 0.6 else sentence(rng, words, False),
                    "output": paragraph(rng, words, False, 1, 6)})
    return out


def make_mc(rng, n):
    out = []
    for _ in range(n):
        opts = rng.sample(CATEGORIES, 4)
        out.append({"task": "Note Taxonomy", "capability": "content_understanding", "format": "multiple_choice",
                    "prompt": "Which category fits this note? " + sentence(rng, NOTE_WORDS, True),
                    "options": opts, "answer": rng.choice(opts)})
    return out


def make_pred_log(rng, n):
    out = []
    for i in range(n):
        gold = rng.choice(CATEGORIES)
        pred = gold if rng.random() < 0.55 else rng.choice([c for c in CATEGORIES if c != gold])
        if pred == gold and rng.random() < 0.2:
            pred = "  " + gold + " "
        out.append({"source_id": f"log-{i:04d}", "prompt": "Classify: " + sentence(rng, NOTE_WORDS, True),
                    "gold": gold, "predicted": pred})
    return out


def make_judged(rng, n):
    out = []
    for i in range(n):
        out.append({"source_id": f"judge-{i:04d}", "prompt": "Reply kindly: " + sentence(rng, QA_WORDS, True),
                    "response_a": paragraph(rng, QA_WORDS, True, 1, 3),
                    "response_b": paragraph(rng, QA_WORDS, True, 1, 3),
                    "judge_preference": rng.choice("AB")})
    return out


def make_calibration(rng, n, agree):
    out = []
    for i in range(n):
        human = rng.choice("AB")
        judge = human if i < round(agree * n) else ("B" if human == "A" else "A")
        out.append({"judge_preference": judge, "human_preference": human})
    rng.shuffle(out)
    return out


def perturb(rng, text, p):
    toks = text.split()
    out = [t for t in toks if rng.random() > p]
    if rng.random() < p:
        out.append(rng.choice(NOTE_WORDS))
    return " ".join(out)


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


CONFIG = """seed = 7

[filter]
corpus = "corpus.jsonl"
reference = "reference.jsonl"
min_tokens = 10
max_tokens = 65536
repetition_threshold = 0.3
retention_target = 0.20
ngram_order = 2

[pack]
threshold = 512

[mixture]
samples = 512
search = 100000
top_k = 32

[sft]
sns = "sns_tasks.jsonl"
general = "general_sft.jsonl"
r1 = "1:3"
r2 = "4:1"
max_len = 16384

[pref]
mc = "mc.jsonl"
pred_log = "pred_log.jsonl"
judged = "judged.jsonl"
calibration = "calibration.jsonl"
tau = 0.8
beta = 0.1
sft_loss_coef = 0.3

[[eval.tasks]]
name = "Note Taxonomy"
metric = "accuracy"
pred = "eval/taxonomy_pred.jsonl"
gold = "eval/taxonomy_gold.jsonl"

[[eval.tasks]]
name = "Highlight Word Detection"
metric = "span_f1"
pred = "eval/highlight_pred.jsonl"
gold = "eval/highlight_gold.jsonl"

[[eval.tasks]]
name = "ZH-EN"
metric = "bleu"
pred = "eval/trans_pred.jsonl"
gold = "eval/trans_gold.jsonl"

[[eval.tasks]]
name = "ZH-EN"
metric = "chrf_pp"
pred = "eval/trans_pred.jsonl"
gold = "eval/trans_gold.jsonl"
"""


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "toy"))
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    out = Path(args.out)
    (out / "eval").mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)

    write_jsonl(out / "corpus.jsonl", make_corpus(rng, 2000))
    write_jsonl(out / "reference.jsonl", make_reference(rng, 300))
    write_jsonl(out / "sns_tasks.jsonl", make_sns_tasks(rng, 20))
    write_jsonl(out / "general_sft.jsonl", make_general_sft(rng, 1000))
    write_jsonl(out / "mc.jsonl", make_mc(rng, 50))
    write_jsonl(out / "pred_log.jsonl", make_pred_log(rng, 80))
    write_jsonl(out / "judged.jsonl", make_judged(rng, 40))
    write_jsonl(out / "calibration.jsonl", make_calibration(rng, 50, 0.86))

    gold = [rng.choice(CATEGORIES) for _ in range(100)]
    pred = [g if rng.random() < 0.7 else rng.choice(CATEGORIES) for g in gold]
    write_jsonl(out / "eval" / "taxonomy_gold.jsonl", [{"id": f"t{i}", "text": g} for i, g in enumerate(gold)])
    write_jsonl(out / "eval" / "taxonomy_pred.jsonl", [{"id": f"t{i}", "text": p} for i, p in enumerate(pred)])
    spans = [" ".join(rng.sample(NOTE_WORDS, rng.randint(1, 4))) for _ in range(100)]
    write_jsonl(out / "eval" / "highlight_gold.jsonl", [{"id": f"h{i}", "text": s} for i, s in enumerate(spans)])
    write_jsonl(out / "eval" / "highlight_pred.jsonl",
                [{"id": f"h{i}", "text": perturb(rng, s, 0.3)} for i, s in enumerate(spans)])
    refs = [sentence(rng, NOTE_WORDS, False) for _ in range(100)]
    write_jsonl(out / "eval" / "trans_gold.jsonl", [{"id": f"z{i}", "text": r} for i, r in enumerate(refs)])
    write_jsonl(out / "eval" / "trans_pred.jsonl",
                [{"id": f"z{i}", "text": perturb(rng, r, 0.2)} for i, r in enumerate(refs)])

    (out / "config.toml").write_text(CONFIG, encoding="utf-8")


if __name__ == "__main__":
    main()
