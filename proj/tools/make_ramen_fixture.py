#!/usr/bin/env python3
"""Regenerates data/ramen: scenario, provider script, knowledge base, criteria, suite."""
import hashlib
import json
import pathlib
import shutil

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data" / "ramen"
W, H = 1440, 3120

TASK = ("Find the best ramen place in Chicago Loop with at least 500 reviews and rating over 4.5. "
        "Write a review summary in Notes.")
SUMMARY = ("RAMEN-SAN Whisky Bar: rating 4.6 from 1,243 reviews. Reviewers praise the rich tonkotsu broth, "
           "quick service and the whisky list.")


def el(id_, text, box, kind="text"):
    return {"id": id_, "text": text, "bbox": box, "kind": kind}


SCREENS = [
    {"id": "home", "app": "None", "elements": [
        el("clock", "9:41", [600, 300, 840, 420]),
        el("app_maps", "Maps", [160, 2500, 400, 2740], "icon"),
        el("app_notes", "Notes", [600, 2500, 840, 2740], "icon"),
    ]},
    {"id": "maps_home", "app": "Maps", "elements": [
        el("search_bar", "Search here", [60, 180, 1380, 340], "input"),
        el("map_canvas", "Map", [0, 400, 1440, 2900]),
    ]},
    {"id": "maps_results", "app": "Maps", "elements": [
        el("query", "ramen in Chicago Loop", [60, 180, 1380, 340]),
        el("filter", "Filter", [30, 1010, 190, 1130]),
        el("result_1", "Ramen Takeya  4.3  (820)", [60, 1200, 1380, 1400]),
        el("result_2", "Oiistar  4.4  (1,011)", [60, 1420, 1380, 1620]),
        el("result_3", "RAMEN-SAN Whisky Bar  4.6  (1,243)", [60, 1640, 1380, 1840]),
    ]},
    {"id": "maps_filter", "app": "Maps", "elements": [
        el("rating_any", "Any rating", [260, 850, 640, 960]),
        el("rating_45", "4.5 Stars & up", [900, 850, 1170, 960]),
        el("apply", "Apply", [800, 2580, 1040, 2700]),
    ]},
    {"id": "maps_filter_45", "app": "Maps", "elements": [
        el("rating_any", "Any rating", [260, 850, 640, 960]),
        el("rating_45", "4.5 Stars & up (selected)", [900, 850, 1170, 960]),
        el("apply", "Apply", [800, 2580, 1040, 2700]),
    ]},
    {"id": "maps_results_rated", "app": "Maps", "elements": [
        el("query", "ramen in Chicago Loop", [60, 180, 1380, 340]),
        el("filter", "Filter: 4.5+", [30, 1010, 330, 1130]),
        el("result_1", "RAMEN-SAN Whisky Bar  4.6  (1,243)", [60, 1500, 1380, 1700]),
        el("result_2", "Ramen Wasabi  4.7  (312)", [60, 1720, 1380, 1920]),
    ]},
    {"id": "maps_place", "app": "Maps", "elements": [
        el("title", "RAMEN-SAN Whisky Bar", [60, 400, 1380, 520]),
        el("rating", "4.6 stars", [60, 540, 500, 640]),
        el("review_count", "1,243 reviews", [520, 540, 1000, 640]),
        el("overview", "Overview", [0, 1000, 1440, 2900]),
    ]},
    {"id": "maps_reviews", "app": "Maps", "elements": [
        el("review_1", "Rich tonkotsu broth, worth the wait.", [60, 400, 1380, 600]),
        el("review_2", "Great whisky list and quick service.", [60, 620, 1380, 820]),
        el("review_3", "Small space, gets loud at night.", [60, 840, 1380, 1040]),
    ]},
    {"id": "notes_home", "app": "Notes", "elements": [
        el("notes_title", "Notes", [60, 180, 600, 320]),
        el("new_note", "Take a note...", [60, 2800, 1380, 2980], "input"),
    ]},
    {"id": "notes_saved", "app": "Notes", "elements": [
        el("notes_title", "Notes", [60, 180, 600, 320]),
        el("saved", "Note saved", [60, 400, 1380, 560]),
    ]},
]

TRANSITIONS = [
    {"from": "home", "on": {"action": "Tap", "element": "app_maps"}, "to": "maps_home"},
    {"from": "home", "on": {"action": "Tap", "element": "app_notes"}, "to": "notes_home"},
    {"from": "maps_home", "on": {"action": "Enter", "element": "search_bar"}, "to": "maps_results"},
    {"from": "maps_results", "on": {"action": "Tap", "element": "filter"}, "to": "maps_filter"},
    {"from": "maps_filter", "on": {"action": "Tap", "element": "rating_45"}, "to": "maps_filter_45"},
    {"from": "maps_filter_45", "on": {"action": "Tap", "element": "apply"}, "to": "maps_results_rated"},
    {"from": "maps_results_rated", "on": {"action": "Tap", "element": "result_1"}, "to": "maps_place"},
    {"from": "maps_results", "on": {"action": "Tap", "element": "result_3"}, "to": "maps_place"},
    {"from": "maps_place", "on": {"action": "Swipe", "element": "overview"}, "to": "maps_reviews"},
    {"from": "notes_home", "on": {"action": "Enter", "element": "new_note"}, "to": "notes_saved",
     "slots": {"saved": "Note saved"}},
]

# Tapping "Apply" before choosing a rating reloads the unfiltered list: the wrong page.
ORACLE = [
    {"screen": "maps_filter", "action": "^Tap at \\{\"x\": 9[0-9]{2}, \"y\": 26[0-9]{2}\\}$", "outcome": "B"},
]
TRANSITIONS.append({"from": "maps_filter", "on": {"action": "Tap", "element": "apply"}, "to": "maps_results"})


def render(name, args):
    if args is None:
        return f"{name} at null"
    return f"{name} at " + json.dumps(args, ensure_ascii=False, separators=(", ", ": "))


def sim_payload(screen, focus=None, slots=None):
    return json.dumps({"focus": focus, "screen": screen, "slots": slots or {}}, separators=(",", ":"),
                      sort_keys=True, ensure_ascii=False)


PLAN = ("1. Open Maps and search for ramen in Chicago Loop. 2. Filter to 4.5 stars and up. "
        "3. Open a place with at least 500 reviews and read its reviews. 4. Open Notes and write a review summary.")

# (subtask, app, action, reflector progress, notes or None for unchanged)
STEPS = [
    ("Open the Maps app.", "Maps", render("Open_App", {"app_name": "Maps"}),
     "Maps is open.", None),
    ("Tap the search bar. Type \"ramen in Chicago Loop\". Tap Enter.", "Maps",
     render("Tap_Type_and_Enter", {"x": 200, "y": 250, "text": "ramen in Chicago Loop"}),
     "Searched for ramen in Chicago Loop.", None),
    ("Tap \"Filter\".", "Maps", render("Tap", {"x": 110, "y": 1068}),
     "Filter panel is open.", None),
    ("Tap \"4.5 Stars & up\".", "Maps", render("Tap", {"x": 1034, "y": 902}),
     "Selected 4.5 stars and up.", None),
    ("Tap \"Apply\".", "Maps", render("Tap", {"x": 917, "y": 2642}),
     "Results are filtered to 4.5 stars and up.", None),
    ("Tap on a ramen place with at least 500 reviews and rating over 4.5.", "Maps",
     render("Tap", {"x": 250, "y": 1600}),
     "Opened RAMEN-SAN Whisky Bar.",
     "RAMEN-SAN Whisky Bar: 4.6 stars, 1,243 reviews."),
    ("Swipe up to read the reviews.", "Maps", render("Swipe", {"x1": 630, "y1": 1400, "x2": 630, "y2": 280}),
     "Read the reviews of RAMEN-SAN Whisky Bar.",
     "RAMEN-SAN Whisky Bar: 4.6 stars, 1,243 reviews. Praised for tonkotsu broth, quick service, whisky list."),
    ("Open the Notes app.", "Notes", render("Open_App", {"app_name": "Notes"}),
     "Notes is open.", None),
    ("Create a note with the review summary.", "Notes",
     render("Tap_Type_and_Enter", {"x": 700, "y": 2890, "text": SUMMARY}),
     "The review summary is saved in Notes.", None),
]


def script():
    out = []
    for i, (subtask, app, action, progress, notes) in enumerate(STEPS):
        if i == 0:
            out.append({"match": "### Reference Plans ###",
                        "response": f"PLAN: {PLAN}\nSUBTASK: {subtask}\nAPP: {app}"})
        else:
            prev = STEPS[i - 1][0]
            out.append({"match": f"### Previous Subtask ###\n{prev}",
                        "response": f"PLAN: {PLAN}\nSUBTASK: {subtask}\nAPP: {app}"})
        out.append({"match": f"Current Subtask: {subtask}\nApp: {app}",
                    "response": f"THOUGHT: Follow the subtask on the current screen.\nACTION: {action}"})
        out.append({"match": f"### Last Action ###\n{action}",
                    "response": f"OUTCOME: A\nPROGRESS: {progress}\nFEEDBACK: none"})
        out.append({"match": "Role: Notetaker",
                    "response": "NOTES: " + (notes if notes is not None else "<unchanged>")})
    out.append({"match": f"### Previous Subtask ###\n{STEPS[-1][0]}",
                "response": f"PLAN: {PLAN}\nSUBTASK: DONE"})
    return out


MANAGER_KB = [
    ("Find the best ramen place in Chicago Loop with at least 500 reviews and rating over 4.5. Write a review "
     "summary in Notes.",
     "open Maps app, tap on the search bar, type \"the best ramen place in Chicago Loop\", enter, swipe down to "
     "find more results, tap on the \"RAMEN-SAN Whisky Bar\", swipe down to find more reviews, tap home, tap "
     "Notes, tap \"+\", tap \"text\", type the review summary"),
    ("Look for a family-friendly restaurant in Urbana suitable for kids. Write a short summary in Notes.",
     "open Maps app, tap on the search bar, type \"family-friendly restaurant in Urbana\", enter, tap the "
     "filter, tap \"good for kids\", tap apply, tap on the first result, swipe down to find more information, "
     "swipe down to find more information, swipe down to find more information, tap home, tap Notes, tap "
     "\"+\", tap \"text\", type the short summary"),
    ("Search for breakfast buffet places near me with good reviews. Compare 2 and write in Notes.",
     "open Maps app, tap on the search bar, type \"breakfast buffet places\", enter, tap filter, tap "
     "\"Distance\", tap \"Apply\", tap on the first result has review, swipe down to find more information, "
     "back, tap on the second result has review, swipe down to find more information, tap home, tap Notes, "
     "tap \"+\", tap \"text\", type the summary to compare the two restaurant"),
    ("Find a hotpot restaurant near a university campus. Write the address and the average user rating into "
     "Notes.",
     "open Maps app, tap on the search bar, type \"hotpot restaurant near a university campus\", enter, tap "
     "the first result, swipe down to find more information, tap home, tap Notes, tap \"+\", tap \"text\", "
     "type the address and the average user rating"),
    ("Find a Chinese restaurant in Chicago with rating over 4.5 that offers takeout. Save 3 dishes and their "
     "prices in Notes.",
     "open Maps app, tap on the search bar, type \"Chinese restaurant in Chicago\", enter, tap filter, tap "
     "\"4.5 star\", tap \"Takeaway\", tap \"Apply\", tap the first result, tap menu, swipe down to find more "
     "information, swipe down to find more information, swipe down to find more information, tap home, tap "
     "Notes, tap \"+\", tap \"text\", type the 3 dishes and their prices"),
]

# (subtask, action, screen the entry was recorded on)
OPERATOR_KB = [
    ("Tap Maps app.", render("Open_App", {"app_name": "Maps"}), "home"),
    ("Tap the search bar.", render("Tap", {"x": 404, "y": 260}), "maps_home"),
    ("Type \"ramen in Chicago Loop\".", render("Type", {"text": "ramen in Chicago Loop"}), "maps_home"),
    ("Tap Enter.", render("Enter", None), "maps_home"),
    ("Tap the search bar. Type \"ramen in Chicago Loop\". Tap Enter.",
     render("Tap_Type_and_Enter", {"x": 200, "y": 250, "text": "ramen in Chicago Loop"}), "maps_home"),
    ("Tap \"Filter\".", render("Tap", {"x": 110, "y": 1068}), "maps_results"),
    ("Tap \"4.5 Stars & up\".", render("Tap", {"x": 1034, "y": 902}), "maps_filter"),
    ("Tap \"Apply.", render("Tap", {"x": 917, "y": 2642}), "maps_filter_45"),
    ("Swipe up to see more results if needed.", render("Swipe", {"x1": 630, "y1": 1400, "x2": 630, "y2": 280}),
     "maps_results"),
    ("Tap on a ramen place with at least 500 reviews and rating over 4.5.", render("Tap", {"x": 250, "y": 1600}),
     "maps_results_rated"),
    ("Tap Home.", render("Home", None), "maps_place"),
    ("Tap a restaurant result.", render("Tap", {"x": 355, "y": 1162}), "maps_results"),
    ("Tap Liuyishou Hotpot(Chicago).", render("Tap", {"x": 609, "y": 2420}), "maps_results"),
    ("Tap \"Takeaway\".", render("Tap", {"x": 335, "y": 1905}), "maps_filter"),
    ("Tap the first restaurant in the results.", render("Tap", {"x": 300, "y": 1300}), "maps_results"),
]

CRITERIA = {
    "task_id": "ramen_chicago_loop",
    "items": [
        {"kind": "opened_app", "args": {"name": "Maps"}, "description": "Opened Maps"},
        {"kind": "executed_action_matching", "args": {"pattern": "ramen in Chicago Loop"},
         "description": "Searched for ramen restaurants in Chicago Loop"},
        {"kind": "note_contains", "args": {"substring": "reviews"},
         "description": "Identified restaurants with > 500 reviews"},
        {"kind": "visited_screen", "args": {"id": "maps_results_rated"},
         "description": "Identified restaurants with rating > 4.5"},
        {"kind": "visited_screen", "args": {"id": "maps_place"}, "description": "Selected the best-rated candidate"},
        {"kind": "opened_app", "args": {"name": "Notes"}, "description": "Opened Notes"},
        {"kind": "visited_screen", "args": {"id": "notes_saved"}, "description": "Created a new note"},
        {"kind": "executed_action_matching", "args": {"pattern": "Tap_Type_and_Enter.*rating 4\\.6.*reviews"},
         "description": "Wrote a review summary with strengths, rating and review count"},
    ],
}


def write_json(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


def main():
    for sub in ("kb", "scenario.json", "script.json", "criteria.json", "suite.json", "task.txt"):
        p = ROOT / sub
        if p.is_dir():
            shutil.rmtree(p)
        elif p.exists():
            p.unlink()
    screens = [{**s, "width": W, "height": H} for s in SCREENS]
    write_json(ROOT / "scenario.json", {
        "name": "ramen_chicago_loop",
        "apps": ["Maps", "Notes"],
        "initial_screen": "home",
        "screens": screens,
        "transitions": TRANSITIONS,
        "oracle_outcomes": ORACLE,
    })
    write_json(ROOT / "script.json", script())
    write_json(ROOT / "criteria.json", CRITERIA)
    (ROOT / "task.txt").write_text(TASK + "\n")

    kb = ROOT / "kb"
    (kb / "operator").mkdir(parents=True)
    (kb / "screenshots").mkdir()
    with open(kb / "manager.jsonl", "w") as f:
        for i, (instr, steps) in enumerate(MANAGER_KB):
            f.write(json.dumps({"id": i, "instruction": instr, "human_steps": steps}, ensure_ascii=False,
                               separators=(",", ":")) + "\n")
    with open(kb / "operator" / "Maps.jsonl", "w") as f:
        for i, (subtask, action, screen) in enumerate(OPERATOR_KB):
            payload = sim_payload(screen).encode()
            digest = hashlib.sha256(payload).hexdigest()
            rel = f"screenshots/{digest}.json"
            (kb / rel).write_bytes(payload)
            f.write(json.dumps({"id": i, "app": "Maps", "subtask": subtask, "screenshot": rel, "action": action},
                               ensure_ascii=False, separators=(",", ":")) + "\n")

    write_json(ROOT / "suite.json", {
        "name": "ramen",
        "tasks": [{
            "id": "ramen_chicago_loop",
            "category": "restaurant",
            "instruction": TASK,
            "scenario": "scenario.json",
            "criteria": "criteria.json",
            "script": "script.json",
            "kb": "kb",
        }],
    })


if __name__ == "__main__":
    main()
