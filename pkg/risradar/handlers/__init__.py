"""Обработчики подкоманд CLI"""
