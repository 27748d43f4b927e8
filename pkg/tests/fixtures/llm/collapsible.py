if condition1:
    if condition2:
        # code
        do_something()
