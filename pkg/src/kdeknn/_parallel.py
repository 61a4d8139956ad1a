from concurrent.futures import ThreadPoolExecutor


def row_chunks(n, threads, min_chunk=64):
    """Split ``range(n)`` into contiguous (start, stop) blocks, one or more per thread."""
    if threads <= 1 or n <= min_chunk:
        return [(0, n)]
    size = max(min_chunk, -(-n // (threads * 4)))
    return [(s, min(n, s + size)) for s in range(0, n, size)]


def ordered_map(fn, items, threads=1):
    """``list(map(fn, items))`` on a thread pool; result order follows ``items``."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
