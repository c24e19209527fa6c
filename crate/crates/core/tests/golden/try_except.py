def read_value(path):
    try:
        data = open(path).read()
    except FileNotFoundError:
        return None
    except (ValueError, TypeError) as err:
        print(err)
        return None
    return data


def risky(fn):
    try:
        return fn()
    except Exception:
        return -1


def swallow(fn):
    try:
        fn()
    except:
        pass
    finally:
        print("done")
