"""Моделирование и настройка RIS для подавления помех OFDM-радара"""

__version__ = "0.1.0"
