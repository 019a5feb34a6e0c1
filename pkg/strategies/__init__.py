"""Coordination strategies package"""
