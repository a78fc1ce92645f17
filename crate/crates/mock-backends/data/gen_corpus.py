"""Regenerates corpus.json. Deterministic: fixed seed, no external input."""
import json
import random

rng = random.Random(20190601)

GENRES = ["comedy", "drama", "horror", "action", "romance", "thriller",
          "science fiction", "animation", "documentary", "fantasy"]
ACTORS = ["Ava Stone", "Marcus Reed", "Lena Okafor", "Tomas Varga", "June Park",
          "Idris Hale", "Nora Quist", "Felix Arden", "Maya Torres", "Owen Blake",
          "Priya Nair", "Hugo Lindqvist", "Sasha Grey", "Elio Marchetti", "Rosa Bell"]
DIRECTORS = ["Clara Voss", "Ravi Mehta", "Dana Whitfield", "Kenji Mori",
             "Lucia Ferraro", "Sam Okoye", "Greta Holm", "Victor Lang"]
ADJ = ["Silent", "Crimson", "Paper", "Hollow", "Velvet", "Broken", "Golden", "Frozen",
       "Wild", "Distant", "Electric", "Quiet", "Burning", "Lonely", "Hidden", "Restless"]
NOUN = ["Harbor", "Lanterns", "Orchard", "Signal", "Carnival", "Frontier", "Meridian",
        "Tides", "Engine", "Garden", "Avalanche", "Parade", "Lighthouse", "Compass",
        "Canyon", "Mirror"]

titles = set()
while len(titles) < 60:
    titles.add(f"{rng.choice(ADJ)} {rng.choice(NOUN)}")
titles = sorted(titles)
rng.shuffle(titles)

items = []
for n, title in enumerate(titles, start=1):
    iid = f"m{n:03d}"
    if n in (7, 31):
        # stand-up specials: a genre tag and nothing else
        feats = [{"category": "genre", "value": "comedy"}]
    else:
        genres = rng.sample(GENRES, rng.choice([1, 1, 2]))
        actors = rng.sample(ACTORS, rng.choice([1, 2]))
        feats = ([{"category": "genre", "value": g} for g in genres]
                 + [{"category": "actor", "value": a} for a in actors]
                 + [{"category": "director", "value": rng.choice(DIRECTORS)}])
    lead = ", ".join(f["value"] for f in feats if f["category"] == "genre")
    items.append({
        "item_id": iid,
        "title": title,
        "features": feats,
        "description": f"{title} is {'an' if lead[0] in 'aeiou' else 'a'} {lead} feature from the bundled demo catalog.",
    })

users = []
for u in range(1, 11):
    k = rng.randint(3, 15)
    picks = rng.sample(items, k)
    history = []
    for j, it in enumerate(picks):
        entry = {"item": it["item_id"], "score": rng.choice([3, 4, 4, 5, 5]),
                 "timestamp": 1_560_000_000 + 86_400 * (u * 20 + j)}
        if j % 4 == 3:
            del entry["score"]
        history.append(entry)
    user = {"user_id": f"u{u}", "history": history}
    if u % 3 == 0:
        user["segment"] = {"tier": "gold", "since": 2017}
    users.append(user)

# u1 has watched comedies only.
comedies = [it["item_id"] for it in items
            if any(f["value"] == "comedy" for f in it["features"])]
users[0]["history"] = [{"item": c, "score": 5, "timestamp": 1_560_000_000 + i}
                       for i, c in enumerate(comedies[:4])]

with open("corpus.json", "w") as f:
    json.dump({"items": items, "users": users}, f, indent=1)
    f.write("\n")
print(len(items), "items", len(users), "users", "comedies", len(comedies))
