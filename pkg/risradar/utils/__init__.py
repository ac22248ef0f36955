"""Утилиты тулкита"""
