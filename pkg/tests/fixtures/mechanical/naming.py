def _normalise(rawText):
    cleanText = rawText.strip()
    return cleanText.lower()


def tally(items):
    runningTotal = 0
    for Item in items:
        runningTotal += Item
    return runningTotal
