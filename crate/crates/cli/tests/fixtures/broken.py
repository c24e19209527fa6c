def broken(:
    return "x
