"""Bundled English function-word list used as the default stopword set.

Entries are lowercase (the tokenizer lowercases before filtering). Override
via ``TokenizerConfig(stopwords=...)`` for other languages or house styles.
"""

ENGLISH_STOPWORDS = frozenset("""
a about above after again against all also am an and any are aren as at
be because been before being below between both but by
can cannot could couldn
did didn do does doesn doing don down during
each either
few for from further
had hadn has hasn have haven having he her here hers herself him himself his
how however
i if in into is isn it its itself
just
let
may me might mine more most mustn my myself
no nor not now
of off on once only onto or other ought our ours ourselves out over own
per
rather
same shall shan she should shouldn since so some such
than that the their theirs them themselves then there these they this those
through thus to too
under until unto up upon us
very via
was wasn we were weren what when where which while who whom why will with
within without won would wouldn
yet you your yours yourself yourselves
""".split())
