"""Connected-component + Gabor/SVM scene-text localization."""
__version__ = "0.1.0"
