#!/usr/bin/env python3
"""Writes tests/fixtures/smoke/{corpus,qa}.jsonl.

Twenty documents each carry one planted sentence that answers one question; ten
more are distractors. Filler sentences draw on a vocabulary that shares at most a
few function words with the questions, so the planted sentence is the unique
highest-overlap sentence for its question. The C++ tests re-check that property
by brute force before trusting the fixture.
"""
import hashlib
import json
import random
import re
from pathlib import Path

ITEMS = [
    ("Who designed the copper fountain in Ardley Square?",
     "Tessa Marlow designed the copper fountain in Ardley Square.", 0),
    ("When does the Quillfield lantern parade begin?",
     "The Quillfield lantern parade begins at dusk on the first Friday of October.", 0),
    ("How many seats does the Varnell Street theater have?",
     "The Varnell Street theater has 412 seats.", 0),
    ("What is the name of the ferry that crosses Lake Ombry?",
     "The ferry that crosses Lake Ombry is named the Silver Heron.", 0),
    ("Which team won the 2023 Brisk Valley rowing cup?",
     "The Kestrel Boat Club won the 2023 Brisk Valley rowing cup.", 0),
    ("Where is the Halvorsen glass museum located?",
     "The Halvorsen glass museum is located on Pell Avenue in Dunmore.", 0),
    ("For visitors arriving by train from the east, which platform at Corvin Junction station serves "
     "the express service to the riverfront district?",
     "The express service to the riverfront district leaves from platform 6 at Corvin Junction station.", 0),
    ("What does the Orrin Hill bakery sell on Sundays?",
     "On Sundays the Orrin Hill bakery sells only rye loaves.", 0),
    ("Who conducts the Felsbridge youth orchestra this season?",
     "Mara Ilves conducts the Felsbridge youth orchestra this season.", 1),
    ("How much does a day pass for the Wrenfield incline cost?",
     "A day pass for the Wrenfield incline costs nine dollars.", 1),
    ("Which bridge connects Tolland Island to the north shore?",
     "The Amberlane Bridge connects Tolland Island to the north shore.", 0),
    ("What year was the Grissom Park bandshell built?",
     "The Grissom Park bandshell was built in 1931.", 0),
    ("During the winter market at Pemberly Yard, which vendor sells hand-dipped candles?",
     "The vendor that sells hand-dipped candles at the Pemberly Yard winter market is Calder and Finch.", 0),
    ("Who is the current mayor of Ostrava Falls?",
     "The current mayor of Ostrava Falls is Renata Kolb.", 1),
    ("What color are the trolleys on the Lindqvist line?",
     "The trolleys on the Lindqvist line are painted forest green.", 0),
    ("How long is the Saltmarsh heritage trail?",
     "The Saltmarsh heritage trail is eleven kilometers long.", 0),
    ("If I want to attend the free outdoor film screenings at Belcourt Meadow this summer, on which "
     "night of the week are they held?",
     "The free outdoor film screenings at Belcourt Meadow are held every Thursday night this summer.", 1),
    ("Which chef runs the kitchen at the Dovecote Inn?",
     "Chef Anselm Ruiz runs the kitchen at the Dovecote Inn.", 1),
    ("What is the admission price for children at the Marrow Creek aquarium on weekdays?",
     "On weekdays the admission price for children at the Marrow Creek aquarium is four dollars.", 1),
    ("Who founded the Pinecrest debate society?",
     "The Pinecrest debate society was founded by Iris Okafor.", 0),
]

FILLER = [
    "Residents gather here on warm evenings.",
    "Volunteers repaint benches every spring.",
    "Several murals brighten nearby alleys.",
    "Local historians keep careful records.",
    "Buses stop close by every twenty minutes.",
    "Neighbors organize cleanups twice a year.",
    "Old brick warehouses line several blocks.",
    "Cyclists share wide lanes with joggers.",
    "Small shops stay open until late evening.",
    "Students often study in quiet corners.",
    "Maple trees shade narrow sidewalks.",
    "Autumn brings crowds of leaf watchers.",
    "Parking remains scarce during festivals.",
    "Public restrooms sit beside visitor kiosks.",
    "Guided walks cover architecture and industry.",
    "Many families picnic beneath tall oaks.",
    "Street musicians play jazz standards.",
    "Printed maps cost nothing at kiosks.",
    "Dogs must stay leashed near playgrounds.",
    "Rain rarely cancels scheduled tours.",
    "Photographers love early morning fog.",
    "Community gardens grow beans and squash.",
    "Fresh bread smells drift along corridors.",
    "Retired steelworkers share stories with newcomers.",
    "Snow plows clear main roads quickly.",
    "Librarians host weekly reading circles.",
    "Recycling bins stand beside most entrances.",
    "Painted stairways climb steep hillsides.",
    "Stone walls date back generations.",
    "Evening lights reflect off calm water.",
    "Birdwatchers count herons and ducks.",
    "Wooden signs point toward scenic overlooks.",
    "Craftspeople sell pottery and quilts.",
    "Weekend traffic moves slowly downtown.",
    "Coffee carts appear near busy corners.",
    "Children chase pigeons across plazas.",
    "Chess players meet under striped awnings.",
    "Ivy covers older stone buildings.",
    "Ticket booths accept cards and cash.",
    "Flower beds bloom with tulips each April.",
]

# Distractor sentences that mention question entities without answering.
NEAR_MISSES = [
    "Ardley Square hosts a farmers market.",
    "Lake Ombry freezes in hard winters.",
    "Corvin Junction opened long ago.",
    "Ostrava Falls attracts hikers.",
    "Belcourt Meadow floods after storms.",
    "Marrow Creek runs beside old mills.",
    "Dovecote Inn has creaky floors.",
    "Pemberly Yard once stored timber.",
    "Tolland Island has sandy beaches.",
    "Grissom Park has tennis courts.",
]

CATEGORIES = ["city", "events", "culture", "food", "history", "museums", "music", "sports"]


def tokens(text):
    return [t for t in re.split(r"[^0-9a-z]+", text.lower()) if t]


def main():
    root = Path(__file__).resolve().parent.parent
    out_dir = root / "tests" / "fixtures" / "smoke"
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20241016)

    docs = []
    qa = []
    for i in range(30):
        n_fill = rng.randint(4, 9)
        sentences = rng.sample(FILLER, n_fill)
        if i < 20:
            question, answer, ts = ITEMS[i]
            sentences.insert(rng.randint(0, n_fill), answer)
            qa.append({
                "id": f"q{i + 1:02d}",
                "question": question,
                "reference_answer": answer,
                "time_sensitive": ts,
                "origin": "manual",
            })
        else:
            sentences.insert(rng.randint(0, n_fill), NEAR_MISSES[i - 20])
        # Two or three paragraphs.
        cut = sorted(rng.sample(range(1, len(sentences)), rng.randint(1, 2)))
        paragraphs = []
        prev = 0
        for c in cut + [len(sentences)]:
            paragraphs.append(" ".join(sentences[prev:c]))
            prev = c
        content = "\n\n".join(paragraphs)
        source = f"https://fixture.invalid/smoke/doc-{i:02d}"
        doc_id = hashlib.sha256(source.encode()).hexdigest()[:16]
        docs.append({
            "id": doc_id,
            "source": source,
            "title": f"Fixture page {i:02d}",
            "content": content,
            "category": CATEGORIES[i % len(CATEGORIES)],
            "fetched_at": 1700000000 + i,
        })
        if i < 20:
            qa[-1]["source_doc_id"] = doc_id

    # Self-check: the planted sentence has the strictly highest question overlap.
    all_sentences = []
    for d in docs:
        for p in d["content"].split("\n\n"):
            all_sentences.extend(re.split(r"(?<=[.!?])\s+", p))
    for item in qa:
        q = set(tokens(item["question"]))
        scored = sorted(((len(q & set(tokens(s))), s) for s in all_sentences), reverse=True)
        best, runner_up = scored[0], scored[1]
        assert best[1] == item["reference_answer"], (item["id"], best, runner_up)
        assert best[0] > runner_up[0], (item["id"], best, runner_up)

    with open(out_dir / "corpus.jsonl", "w", encoding="utf-8") as f:
        for d in docs:
            f.write(json.dumps(d, ensure_ascii=False) + "\n")
    with open(out_dir / "qa.jsonl", "w", encoding="utf-8") as f:
        for q in qa:
            f.write(json.dumps(q, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
