def both(ready, done):
    return ready and ready or done
