def address(host, port):
    if port:
        addr = host + ":" + str(port)
    else:
        addr = addr
    return addr
