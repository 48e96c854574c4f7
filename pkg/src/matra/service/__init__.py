from .app import AnnotationStore, ServeConfig, TokenBucket, create_app

__all__ = ["AnnotationStore", "ServeConfig", "TokenBucket", "create_app"]
