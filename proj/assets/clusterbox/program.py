# Ground-truth ClusterBox dynamics.

DIRECTIONS = {"up": (0, -1), "down": (0, 1), "left": (-1, 0), "right": (1, 0)}
COLORS = ["red", "blue", "green"]


def connected(cells):
    if len(cells) <= 1:
        return True
    seen = [cells[0]]
    frontier = [cells[0]]
    while frontier:
        x, y = frontier.pop()
        for n in [[x + 1, y], [x - 1, y], [x, y + 1], [x, y - 1]]:
            if n in cells and n not in seen:
                seen.append(n)
                frontier.append(n)
    return len(seen) == len(cells)


def box_color(state, cell):
    for color in COLORS:
        if cell in state.get("box_" + color, []):
            return color
    return None


def transition(state, action):
    agents = state.get("agent", [])
    if not agents:
        return state
    if all(connected(state.get("box_" + c, [])) for c in COLORS):
        return state
    dx, dy = DIRECTIONS[action]
    x, y = agents[0]
    target = [x + dx, y + dy]

    def solid(cell):
        cx, cy = cell
        if cx < 0 or cy < 0 or cx >= state["width"] or cy >= state["height"]:
            return True
        return cell in state.get("wall", [])

    if solid(target):
        return state
    if target in state.get("cherry", []):
        state["agent"] = []
        return state
    chain = []
    cell = target
    while box_color(state, cell) is not None:
        chain.append(cell)
        cell = [cell[0] + dx, cell[1] + dy]
    if chain:
        if solid(cell) or cell in state.get("cherry", []):
            return state
        moves = []
        for b in chain:
            color = box_color(state, b)
            state["box_" + color].remove(b)
            moves.append((color, [b[0] + dx, b[1] + dy]))
        for color, b in moves:
            state["box_" + color].append(b)
    state["agent"] = [target]
    return state
