try:
    import yaml
except ImportError:
    pass
