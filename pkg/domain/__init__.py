"""Domain package"""
