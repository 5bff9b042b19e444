"""Frozen answer-parsing corpus: (answer, noun, expected_word, expected_value).

These strings are the contract for parse_quantity. The acceptance gate runs
the same table, so edits here are edits to the contract, not to a test.
Canonical words spell out 0..10, keep 11..19 as digits, and collapse
anything larger (or uncountable phrasing) to "numerous" with a None value;
expected_word None means unparseable.
"""

QUANTITY_CASES = [
    # plain count words
    ("There are three apples in the image.", "apples", "three", 3),
    ("There are two dogs.", "dogs", "two", 2),
    ("I see four birds in this picture.", "birds", "four", 4),
    ("The image shows five oranges on a table.", "oranges", "five", 5),
    ("Six cats are sitting on the couch.", "cats", "six", 6),
    ("I can count seven balloons.", "balloons", "seven", 7),
    ("Eight fish swim in the tank.", "fish", "eight", 8),
    ("There appear to be nine cups.", "cups", "nine", 9),
    ("Ten candles are on the cake.", "candles", "ten", 10),
    ("There is one apple.", "apples", "one", 1),
    ("Only a single apple appears, so one apple.", "apples", "one", 1),
    # digit answers normalize to the same canonical words
    ("There are 3 apples.", "apples", "three", 3),
    ("I count 12 birds on the wire.", "birds", "12", 12),
    ("The photo contains 15 sheep.", "sheep", "15", 15),
    ("There are 19 bottles.", "bottles", "19", 19),
    ("0 dogs are visible.", "dogs", "zero", 0),
    ("There are 7 eggs in the nest.", "eggs", "seven", 7),
    ("2 boats float on the lake.", "boats", "two", 2),
    ("I believe the count is 4.", "apples", "four", 4),
    ("3", "apples", "three", 3),
    # teens as words come back as digits
    ("Eleven players stand on the field.", "players", "11", 11),
    ("I count twelve roses.", "roses", "12", 12),
    ("There are thirteen stars visible.", "stars", "13", 13),
    ("Fifteen ducks swim in the pond.", "ducks", "15", 15),
    # past the ceiling everything is numerous
    ("Twenty apples fill the basket.", "apples", "numerous", None),
    ("I can see 25 marbles in the jar.", "marbles", "numerous", None),
    ("Roughly 100 birds fill the sky.", "birds", "numerous", None),
    # uncountable family
    ("There are too many apples to count.", "apples", "numerous", None),
    ("Numerous birds fill the frame.", "birds", "numerous", None),
    ("Countless stars dot the sky.", "stars", "numerous", None),
    ("The apples are uncountable in this image.", "apples", "numerous", None),
    ("Far too many to count.", "apples", "numerous", None),
    # zero family
    ("There are no apples in this image.", "apples", "zero", 0),
    ("No dogs appear anywhere.", "dogs", "zero", 0),
    ("I see none.", "apples", "zero", 0),
    ("The image does not contain any birds.", "birds", "zero", 0),
    ("There aren't any cats at all.", "cats", "zero", 0),
    # noun binding picks the mention nearest the asked noun
    ("I see two dogs and three apples.", "apples", "three", 3),
    ("I see two dogs and three apples.", "dogs", "two", 2),
    ("There are four cups and one spoon on the table.", "spoons", "one", 1),
    ("Five birds sit above six fish.", "fish", "six", 6),
    ("Five birds sit above six fish.", "birds", "five", 5),
    ("The shelf holds 3 books and 7 mugs.", "mugs", "seven", 7),
    ("The shelf holds 3 books and 7 mugs.", "books", "three", 3),
    ("One monkey rides two elephants past three tigers.", "elephants", "two", 2),
    # a single mention binds even without the noun nearby
    ("The answer is three.", "apples", "three", 3),
    ("Three.", "apples", "three", 3),
    # sentences with filler around the count
    ("Answer: there are exactly five apples in the image.", "apples", "five", 5),
    ("Looking closely, I can identify six distinct apples.", "apples", "six", 6),
    ("In this image, there appear to be two red apples on the left.",
     "apples", "two", 2),
    ("Yes, the picture clearly shows four parrots perched together.",
     "parrots", "four", 4),
    # capitalization and punctuation
    ("THERE ARE FOUR APPLES.", "apples", "four", 4),
    ("there are four apples", "apples", "four", 4),
    ("Four, maybe?  I'd say four apples.", "apples", "four", 4),
    ("Seven!", "apples", "seven", 7),
    # unparseable
    ("The sky is blue and the grass is green.", "apples", None, None),
    ("I cannot tell from this image.", "apples", None, None),
    ("It is hard to say.", "apples", None, None),
    ("Maybe a few?", "apples", None, None),
    ("", "apples", None, None),
    ("apples apples apples", "apples", None, None),
    # word-boundary traps: substrings must not count
    ("A stone statue stands alone.", "apples", None, None),
    ("The sign says 'Tone it down'.", "apples", None, None),
    ("Someone placed a basket here.", "apples", None, None),
    ("The weather is fine today.", "apples", None, None),
]

YES_NO_CASES = [
    ("Yes, the dice is on top of the monkey.", True),
    ("Yes.", True),
    ("yes", True),
    ("No, the dice is under the monkey.", False),
    ("No.", False),
    ("no", False),
    ("Absolutely, yes, that is correct.", True),
    ("I would say no, it is not.", False),
    ("Yes and no, but mostly yes.", True),
    ("It is unclear from the image.", None),
    ("The dice sits beside the monkey.", None),
    ("", None),
    ("Eyes are visible in the picture.", None),
    ("There is snow on the ground.", None),
]
