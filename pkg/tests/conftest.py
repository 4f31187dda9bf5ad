import hypothesis

# Exact-rational arithmetic and batched numpy calls have uneven per-example
# cost; wall-clock deadlines only produce flaky failures here.
hypothesis.settings.register_profile("default", deadline=None)
hypothesis.settings.load_profile("default")
