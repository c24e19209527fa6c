import os.path as osp
from collections import OrderedDict as ODict


class _Hidden:
    pass


def gather(itemList, *extraArgs):
    first, (second, THIRD) = itemList[0], itemList[1]
    itemList[0] = None
    holder = ODict()
    holder.innerValue = 5
    for idx, val in enumerate(extraArgs):
        print(idx, val)
    with open(osp.join("a", "b")) as fileHandle:
        pass
    try:
        pass
    except OSError as osErr:
        pass
    if (countValue := len(itemList)) > 2:
        return countValue
    squares = [sq * sq for sq in range(3)]
    return first, second, THIRD, squares
