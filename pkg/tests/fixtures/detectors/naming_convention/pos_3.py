def build():
    MyList = []
    MyList.append(1)
    return MyList
