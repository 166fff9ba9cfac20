"""Teaching object arrangements from single examples, then spotting trouble.

Five household arrangements are shown once each as scenes of labeled
bounding boxes. Test scenes then have one object removed or swapped, and
the store names what's missing or what replaced what. Two arrangements
deliberately share two of their three objects so an ambiguous test scene
lands exactly between them: both candidates are reported.
"""

from cbcl.arrangements import ArrangementStore, Scene, SceneObject, check_arrangement, learn_arrangement

NAMES = [
    "toothbrush", "toothpaste", "shampoo", "soap", "fork", "spoon", "plate",
    "cup", "kettle", "teabag", "notebook", "pen", "stapler",
]
LABEL = {name: i for i, name in enumerate(NAMES)}
N = len(NAMES)

SHELF_X = (15.0, 50.0, 85.0)


def scene_of(*names: str) -> Scene:
    objects = tuple(
        SceneObject(LABEL[name], (x - 6, 44.0, x + 6, 56.0))
        for name, x in zip(names, SHELF_X)
    )
    return Scene(objects, (100, 100))


def describe(verdict) -> str:
    if verdict.kind == "consistent":
        note = " (but arranged differently)" if verdict.relation_mismatch else ""
        return f"consistent with {', '.join(verdict.closest)}{note}"
    parts = [f"nearest: {', '.join(verdict.closest)}"]
    if verdict.missing_classes:
        parts.append("missing: " + ", ".join(NAMES[c] for c in sorted(verdict.missing_classes)))
    for observed, expected in sorted(verdict.wrong_pairs):
        parts.append(f"wrong: {NAMES[observed]} should be {NAMES[expected]}")
    return "; ".join(parts)


def main():
    store = ArrangementStore(N)
    taught = {
        "bathroom_shelf": ("shampoo", "toothbrush", "toothpaste"),
        "guest_shelf": ("shampoo", "toothbrush", "soap"),  # shares two objects with the bathroom shelf
        "dinner_setting": ("fork", "plate", "spoon"),
        "tea_corner": ("kettle", "cup", "teabag"),
        "desk_kit": ("notebook", "pen", "stapler"),
    }
    for name, objects in taught.items():
        learn_arrangement(store, name, scene_of(*objects))
        print(f"taught {name}: {', '.join(objects)}")

    print("\n--- test scenes ---")
    cases = [
        ("the dinner setting, untouched", scene_of("fork", "plate", "spoon")),
        ("dinner setting without the spoon", scene_of("fork", "plate")),
        ("a pen where the spoon belongs", scene_of("fork", "plate", "pen")),
        ("soap after the toothpaste: exactly the guest shelf", scene_of("shampoo", "toothbrush", "soap")),
        ("just shampoo and a toothbrush (ambiguous!)", scene_of("shampoo", "toothbrush")),
    ]
    for label, scene in cases:
        verdict = check_arrangement(store, scene)
        print(f"{label}:\n    {describe(verdict)}")

    print("\nthe ambiguous scene sits at the same distance from both shelf")
    print("arrangements, so both completions are offered rather than a guess.")


if __name__ == "__main__":
    main()
