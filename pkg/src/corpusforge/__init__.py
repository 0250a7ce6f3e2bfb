"""corpusforge: turn unlabeled call-center audio into filtered, pseudo-labeled
ASR training manifests via recognizer-committee consensus."""

__version__ = "0.1.0"
