from typing import Dict, Generator, List, Set, Tuple


def build_list() -> List[int]:
    items: List[int] = [1, 2]
    items.append(3)
    items.extend([4, 5])
    items.insert(0, 0)
    return items


def unique_tags() -> Set[str]:
    tags: Set[str] = {"x", "y"}
    tags.add("z")
    return tags


def counts() -> Dict[str, int]:
    table = {}
    table["a"] = 1
    return table


def merged() -> Dict[str, int]:
    base: Dict[str, int] = {"a": 1}
    extra: Dict[str, int] = {"b": 2}
    base.update(extra)
    return base


def labelled() -> List[Tuple[int, str]]:
    nums: List[int] = [1, 2, 3]
    return [(n, str(n)) for n in nums]


def squares() -> Set[int]:
    return {n * n for n in range(5)}


def lazy_doubles() -> Generator[int, None, None]:
    return (n * 2 for n in range(3))


def countdown(start: int) -> Generator[int, None, None]:
    while start > 0:
        yield start
        start = start - 1


def run_countdown() -> List[int]:
    return sorted(countdown(3))


def swap() -> Tuple[str, int]:
    pair: Tuple[int, str] = (1, "a")
    left, right = pair
    return right, left


def tail_items() -> List[int]:
    values: List[int] = [3, 1, 2]
    return values[1:]


def enumerate_words() -> List[int]:
    out: List[int] = []
    for i, w in enumerate(["a", "b"]):
        out.append(i)
    return out
