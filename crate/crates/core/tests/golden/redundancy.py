def dup(a):
    a = a + 1
    a = a + 1
    a   =   a + 1
    return a


def other(b):
    return b
