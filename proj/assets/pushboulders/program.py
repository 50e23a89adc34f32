# Ground-truth Push Boulders dynamics.

DIRECTIONS = {"up": (0, -1), "down": (0, 1), "left": (-1, 0), "right": (1, 0)}
COLORS = ["red", "blue", "yellow"]


def color_of(state, prefix, cell):
    for color in COLORS:
        if cell in state.get(prefix + color, []):
            return color
    return None


def blocked(state, cell):
    x, y = cell
    if x < 0 or y < 0 or x >= state["width"] or y >= state["height"]:
        return True
    return cell in state.get("wall", [])


def transition(state, action):
    agents = state.get("agent", [])
    if not agents or agents[0] in state.get("goal", []):
        return state
    dx, dy = DIRECTIONS[action]
    x, y = agents[0]
    target = [x + dx, y + dy]
    if blocked(state, target):
        return state
    if color_of(state, "poison_", target) is not None:
        state["agent"] = []
        return state
    chain = []
    cell = target
    while color_of(state, "boulder_", cell) is not None:
        chain.append(cell)
        cell = [cell[0] + dx, cell[1] + dy]
    if chain:
        if blocked(state, cell) or cell in state.get("goal", []):
            return state
        poison = color_of(state, "poison_", cell)
        last = color_of(state, "boulder_", chain[-1])
        if poison is not None and poison != last:
            return state
        moves = []
        for b in chain:
            color = color_of(state, "boulder_", b)
            state["boulder_" + color].remove(b)
            moves.append((color, [b[0] + dx, b[1] + dy]))
        if poison is not None:
            moves.pop()
            state["poison_" + poison].remove(cell)
        for color, b in moves:
            state.setdefault("boulder_" + color, []).append(b)
    state["agent"] = [target]
    return state
