"""Small bundled datasets used by the tests and the demos."""

SAMPLE_NTRIPLES = """\
<User0> <follows> <User1> .
<Product0> <actor> <User0> .
<Product0> <director> <User1> .
<Product0> <director> <User3> .
<Product0> <actor> <User4> .
<User3> <FriendOf> <User0> .
<User1> <follows> <User0> .
<Product1> <director> <User2> .
<Product1> <director> <User4> .
<User3> <follows> <User4> .
<User4> <follows> <User1> .
<Product2> <director> <User4> .
"""

# Fixed vertex numbering of the sample graph; first-appearance order
# would number User3 before User2.
SAMPLE_ENTITY_ORDER = (
    "User0", "User1", "Product0", "User2", "User3", "User4", "Product1", "Product2",
)

SAMPLE_QUERY = """\
SELECT ?v0 ?v1 ?v2 ?v3 WHERE {
  ?v0 <actor> ?v1 .
  ?v0 <director> ?v2 .
  ?v2 <follows> ?v1 .
  ?v3 <follows> ?v2 .
}
"""

# 3x3 example matrix with entries a..i, encoded as predicate ids 1..9.
LETTER_NAMES = "abcdefghi"
LETTER_MATRIX = [[1, 2, 3], [4, 5, 6], [7, 8, 9]]
