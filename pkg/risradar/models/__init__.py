"""Модели данных"""
