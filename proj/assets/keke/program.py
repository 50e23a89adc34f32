# Ground-truth dynamics for the rule-pushing word game.

DIRECTIONS = {"up": (0, -1), "down": (0, 1), "left": (-1, 0), "right": (1, 0)}
PROPERTIES = ["you", "win", "stop", "push", "sink"]
AUX = ["width", "height", "rules_formed", "overlappables"]


def base(t):
    if t.endswith("_word"):
        return t[:-5]
    if t.endswith("_obj"):
        return t[:-4]
    return t


def is_word(t):
    return t.endswith("_word")


def is_obj(t):
    return t.endswith("_obj")


def noun_word(t):
    return is_word(t) and base(t) != "is" and base(t) not in PROPERTIES


def property_word(t):
    return is_word(t) and base(t) in PROPERTIES


def object_keys(state):
    return sorted(k for k in state if k not in AUX)


def parse_rules(state):
    words = {}
    for t in object_keys(state):
        if is_word(t):
            for x, y in state[t]:
                words.setdefault((x, y), []).append(t)
    found = set()
    for cell, here in words.items():
        x, y = cell
        for t in here:
            if not noun_word(t):
                continue
            for dx, dy in [(1, 0), (0, 1)]:
                if "is_word" not in words.get((x + dx, y + dy), []):
                    continue
                for w in words.get((x + 2 * dx, y + 2 * dy), []):
                    if noun_word(w) or property_word(w):
                        found.add(t + " is_word " + w)
    return sorted(found)


def rule_tables(rules):
    props = {}
    nouns = {}
    for rule in rules:
        subject, _, target = rule.split(" ")
        table = props if property_word(target) else nouns
        table.setdefault(base(subject), []).append(base(target))
    return props, nouns


def has(props, t, prop):
    return is_obj(t) and prop in props.get(base(t), [])


def pushable(props, t):
    return is_word(t) or has(props, t, "push")


def stops(props, t):
    return not pushable(props, t) and has(props, t, "stop")


def types_at(state, cell):
    return [k for k in state if k not in AUX and cell in state[k]]


def can_enter(state, props, cell, dx, dy):
    if not (0 <= cell[0] < state["width"] and 0 <= cell[1] < state["height"]):
        return False
    pushables = False
    for t in types_at(state, cell):
        if stops(props, t):
            return False
        if pushable(props, t):
            pushables = True
    return not pushables or can_enter(state, props, [cell[0] + dx, cell[1] + dy], dx, dy)


def push_from(state, props, cell, dx, dy):
    movers = [t for t in types_at(state, cell) if pushable(props, t)]
    if not movers:
        return
    nxt = [cell[0] + dx, cell[1] + dy]
    push_from(state, props, nxt, dx, dy)
    for t in movers:
        while cell in state[t]:
            state[t].remove(cell)
            state[t].append(nxt)


def terminal(state, props):
    you = []
    win = []
    for t in object_keys(state):
        if has(props, t, "you"):
            you.extend(state[t])
        if has(props, t, "win"):
            win.extend(state[t])
    return not you or any(c in win for c in you)


def transition(state, action):
    props, _ = rule_tables(parse_rules(state))
    if terminal(state, props):
        return state
    dx, dy = DIRECTIONS[action]

    # movement under the rules in force at the start of the step
    movers = []
    for t in object_keys(state):
        if has(props, t, "you"):
            for c in sorted(state[t]):
                lead = c[0] * dx + c[1] * dy
                across = c[1] if dx != 0 else c[0]
                movers.append((-lead, across, t, c))
    movers.sort()
    for _, _, t, c in movers:
        if c not in state.get(t, []):
            continue
        nxt = [c[0] + dx, c[1] + dy]
        if not can_enter(state, props, nxt, dx, dy):
            continue
        push_from(state, props, nxt, dx, dy)
        state[t].remove(c)
        state[t].append(nxt)

    # transmutation: X is Y turns every X into Y in place
    rules = parse_rules(state)
    props, nouns = rule_tables(rules)
    conversions = []
    for noun in sorted(nouns):
        targets = nouns[noun]
        if noun in targets or len(targets) != 1:
            continue
        if not state.get(noun + "_obj"):
            continue
        conversions.append((noun + "_obj", targets[0] + "_obj"))
    snapshot = {}
    for src, _ in conversions:
        snapshot[src] = state.pop(src)
    for src, dst in conversions:
        state.setdefault(dst, []).extend(snapshot[src])

    # sink: everything sharing a cell with a sink object is destroyed
    keys = object_keys(state)
    counts = {}
    for u in keys:
        for x, y in state[u]:
            counts[(x, y)] = counts.get((x, y), 0) + 1
    doomed = []
    for t in keys:
        if not has(props, t, "sink"):
            continue
        for c in state[t]:
            if counts[(c[0], c[1])] >= 2 and c not in doomed:
                doomed.append(c)
    for c in doomed:
        for u in keys:
            state[u] = [p for p in state[u] if p != c]
    if doomed:
        rules = parse_rules(state)
        props, _ = rule_tables(rules)

    state["rules_formed"] = rules
    state["overlappables"] = sorted(
        t for t in object_keys(state)
        if is_obj(t) and state[t] and not has(props, t, "stop") and not has(props, t, "push") and not has(props, t, "you"))
    return state
