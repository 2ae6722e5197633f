def h(n):
    if n < 2: return n
    return h(n - 1) + h(n - 2) if n > 1 else (yield)
