from hypothesis import HealthCheck, settings

settings.register_profile("talu", deadline=None, max_examples=200,
                         suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("talu")
