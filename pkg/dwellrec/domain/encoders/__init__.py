"""
User encoders: configuration, history encoding, the variant plugins and the
recommender model that scores candidates with them.
"""
