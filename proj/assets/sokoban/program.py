# Ground-truth Sokoban dynamics.

DIRECTIONS = {"up": (0, -1), "down": (0, 1), "left": (-1, 0), "right": (1, 0)}


def is_free(state, x, y):
    if x < 0 or y < 0 or x >= state["width"] or y >= state["height"]:
        return False
    return [x, y] not in state.get("wall", [])


def transition(state, action):
    boxes = state.get("box", [])
    holes = state.get("hole", [])
    if all(b in holes for b in boxes):
        return state
    dx, dy = DIRECTIONS[action]
    x, y = state["agent"][0]
    tx, ty = x + dx, y + dy
    if not is_free(state, tx, ty):
        return state
    chain = []
    cx, cy = tx, ty
    while [cx, cy] in boxes:
        chain.append([cx, cy])
        cx, cy = cx + dx, cy + dy
    if chain and not is_free(state, cx, cy):
        return state
    moved = [b for b in boxes if b not in chain]
    for bx, by in chain:
        moved.append([bx + dx, by + dy])
    state["box"] = moved
    state["agent"] = [[tx, ty]]
    return state
