import unittest

from readings import pick_reading, total


class ReadingsTest(unittest.TestCase):
    def test_pick_reading(self):
        self.assertEqual(pick_reading([10, 20, 30], [1, 2], True, True), 20)

    def test_pick_reading_disabled(self):
        self.assertIsNone(pick_reading([10], [0], False, True))

    def test_total(self):
        self.assertEqual(total([1, 2, 3]), 6)


if __name__ == "__main__":
    unittest.main()
