def count_down(n):
    result = []
    while n != 0:
        result.append(n)
        n -= 2
    return result
