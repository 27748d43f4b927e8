def compute_total(prices, tax_rate):
    subtotal = sum(prices)
    return subtotal * (1 + tax_rate)
