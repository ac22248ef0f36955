"""Сервисный слой: моделирование, оценка углов, обучение, карты и прогоны"""
