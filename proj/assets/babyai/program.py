# Ground-truth dynamics for the key/door/box rooms.

DIRECTIONS = {"up": (0, -1), "down": (0, 1), "left": (-1, 0), "right": (1, 0)}
ITEMS = ["ball", "box", "key"]


def item_at(state, cell):
    for item in ITEMS:
        if cell in state.get(item, []):
            return item
    return None


def in_bounds(state, cell):
    return 0 <= cell[0] < state["width"] and 0 <= cell[1] < state["height"]


def transition(state, action):
    carrying = state.get("carrying", [])
    mission = state.get("mission", [])
    if mission and carrying and carrying[0] == mission[0]:
        return state
    x, y = state["agent"][0]
    if action in DIRECTIONS:
        state["facing"] = [action]
        dx, dy = DIRECTIONS[action]
        target = [x + dx, y + dy]
        if not in_bounds(state, target):
            return state
        for blocker in ["wall", "door_locked"]:
            if target in state.get(blocker, []):
                return state
        if item_at(state, target) is None:
            state["agent"] = [target]
        return state
    dx, dy = DIRECTIONS[state["facing"][0]]
    front = [x + dx, y + dy]
    if not in_bounds(state, front):
        return state
    if action == "pickup":
        item = item_at(state, front)
        if not carrying and item is not None:
            state[item].remove(front)
            state["carrying"] = [item]
    elif action == "drop":
        occupied = any(front in cells for key, cells in state.items()
                       if key not in ("width", "height", "carrying", "facing", "mission"))
        if carrying and not occupied:
            state.setdefault(carrying[0], []).append(front)
            state["carrying"] = []
    elif action == "toggle":
        if front in state.get("door_locked", []) and carrying == ["key"]:
            state["door_locked"].remove(front)
            state.setdefault("door_open", []).append(front)
    return state
