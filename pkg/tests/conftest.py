import hypothesis

hypothesis.settings.register_profile(
    "ci", deadline=None, max_examples=50, print_blob=False
)
hypothesis.settings.load_profile("ci")
