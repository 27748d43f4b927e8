import os

# print(os.getcwd())
# os.remove(target)
separator = os.sep
